//! Seeded generators for states, rotations, controls and planes.
//!
//! All experiments draw from `ChaCha8Rng` so runs are reproducible across
//! platforms given a seed.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use std::f64::consts::PI;

use crate::dynamics::ControlSchedule;
use crate::geometry::{any_orthogonal, rotate, AxisAngle, RotationChain, UnitVec3, Vec3};
use crate::state::RawState;

pub use rand::SeedableRng;

pub type SeededRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform point on the unit sphere.
pub fn random_unit<R: Rng>(rng: &mut R) -> UnitVec3 {
    loop {
        let g = Vec3::new(
            StandardNormal.sample(rng),
            StandardNormal.sample(rng),
            StandardNormal.sample(rng),
        );
        if let Ok(u) = UnitVec3::normalize(g) {
            return u;
        }
    }
}

/// Uniform unit tangent vector at `n`.
pub fn random_tangent<R: Rng>(rng: &mut R, n: &UnitVec3) -> UnitVec3 {
    let t = any_orthogonal(n);
    let angle = rng.gen_range(0.0..2.0 * PI);
    UnitVec3::normalize(rotate(&AxisAngle { axis: *n, angle }, &t)).expect("unit tangent")
}

pub fn random_state<R: Rng>(rng: &mut R) -> RawState {
    let u = random_unit(rng);
    let v = random_unit(rng);
    let a = random_tangent(rng, &u);
    let b = random_tangent(rng, &v);
    RawState::from_units(u, v, a, b)
}

/// A state whose contact points lie within geodesic distance `radius` of the
/// north poles.
pub fn random_state_near_base<R: Rng>(rng: &mut R, radius: f64) -> RawState {
    let tilt = |rng: &mut R| {
        let azimuth = rng.gen_range(0.0..2.0 * PI);
        let axis = UnitVec3::new(Vec3::new(azimuth.cos(), azimuth.sin(), 0.0)).expect("unit");
        let angle = rng.gen_range(0.0..radius);
        UnitVec3::normalize(rotate(&AxisAngle { axis, angle }, &Vec3::z())).expect("unit")
    };
    let u = tilt(rng);
    let v = tilt(rng);
    let a = random_tangent(rng, &u);
    let b = random_tangent(rng, &v);
    RawState::from_units(u, v, a, b)
}

pub fn random_rotation<R: Rng>(rng: &mut R) -> AxisAngle {
    AxisAngle {
        axis: random_unit(rng),
        angle: rng.gen_range(-PI..PI),
    }
}

pub fn random_rotation_chain<R: Rng>(rng: &mut R, factors: usize) -> RotationChain {
    RotationChain::from_factors((0..factors).map(|_| random_rotation(rng)).collect())
}

/// Piecewise-constant controls with `segments` pieces and the given total
/// duration. Segment lengths are drawn between 0.5 and 1.5 times the mean and
/// consecutive headings differ by at least 0.5 rad.
pub fn random_schedule<R: Rng>(rng: &mut R, segments: usize, total: f64) -> ControlSchedule {
    random_schedule_with_turns(rng, segments, total, 0.5, PI - 0.5)
}

/// As [`random_schedule`] with heading changes of magnitude drawn from
/// `[min_turn, max_turn)` and random sign.
pub fn random_schedule_with_turns<R: Rng>(
    rng: &mut R,
    segments: usize,
    total: f64,
    min_turn: f64,
    max_turn: f64,
) -> ControlSchedule {
    let weights: Vec<f64> = (0..segments).map(|_| rng.gen_range(0.5..1.5)).collect();
    let sum: f64 = weights.iter().sum();
    let mut heading = rng.gen_range(-PI..PI);
    let mut pieces = Vec::with_capacity(segments);
    for w in weights {
        pieces.push((total * w / sum, heading));
        let turn = rng.gen_range(min_turn..max_turn) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        heading = wrap_angle(heading + turn);
    }
    ControlSchedule::new(pieces).expect("positive durations")
}

/// Unit 5-vector with Gaussian direction.
pub fn random_plane_normal<R: Rng>(rng: &mut R) -> [f64; 5] {
    loop {
        let mut k = [0.0; 5];
        for c in k.iter_mut() {
            *c = StandardNormal.sample(rng);
        }
        let n = k.iter().map(|c| c * c).sum::<f64>().sqrt();
        if n > 1e-3 {
            return k.map(|c| c / n);
        }
    }
}

/// Maps an angle into `(-pi, pi]`.
pub fn wrap_angle(theta: f64) -> f64 {
    let t = theta.rem_euclid(2.0 * PI);
    if t > PI {
        t - 2.0 * PI
    } else {
        t
    }
}

/// Draws `count` sorted 5-tuples of distinct entries of `times` whose
/// neighbours are at least `min_gap` apart.
///
/// Gives up (returns fewer tuples) after `50 * count` rejected draws, which
/// only happens when `times` is too short to host such tuples.
pub fn random_time_tuples<R: Rng>(
    rng: &mut R,
    times: &[f64],
    count: usize,
    min_gap: f64,
) -> Vec<[f64; 5]> {
    let mut out = Vec::with_capacity(count);
    if times.len() < 5 {
        return out;
    }
    let mut attempts = 0;
    while out.len() < count && attempts < 50 * count.max(1) {
        attempts += 1;
        let mut idx = rand::seq::index::sample(rng, times.len(), 5).into_vec();
        idx.sort_unstable();
        let tuple = [
            times[idx[0]],
            times[idx[1]],
            times[idx[2]],
            times[idx[3]],
            times[idx[4]],
        ];
        if tuple.windows(2).all(|w| w[1] - w[0] >= min_gap) {
            out.push(tuple);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_draws() {
        let (mut r1, mut r2) = (seeded(5), seeded(5));
        assert_eq!(random_state(&mut r1), random_state(&mut r2));
        assert_eq!(random_plane_normal(&mut r1), random_plane_normal(&mut r2));
    }

    #[test]
    fn drawn_states_are_valid() {
        let mut rng = seeded(1);
        for _ in 0..100 {
            assert!(random_state(&mut rng).invariant_defect() <= 1e-15);
            let s = random_state_near_base(&mut rng, 0.5);
            assert!(s.u().z >= 0.5f64.cos() - 1e-15 && s.v().z >= 0.5f64.cos() - 1e-15);
        }
    }

    #[test]
    fn time_tuples_respect_gap() {
        let mut rng = seeded(2);
        let times: Vec<f64> = (1..100).map(|k| k as f64 * 0.01).collect();
        let tuples = random_time_tuples(&mut rng, &times, 40, 0.02);
        assert_eq!(tuples.len(), 40);
        for t in tuples {
            assert!(t.windows(2).all(|w| w[1] - w[0] >= 0.02));
        }
    }

    #[test]
    fn wrap_angle_range() {
        assert_eq!(wrap_angle(PI), PI);
        assert!((wrap_angle(-PI) - PI).abs() < 1e-15);
        assert!((wrap_angle(7.0) - (7.0 - 2.0 * PI)).abs() < 1e-15);
    }
}
