//! Linear relations among contact points and the curves that keep them.
//!
//! The contact features of a state are `phi = (u1, u2, v1, v2, u3 - v3)`. A
//! plane is a unit `k` in R^5 with relation `k . phi = 0`; equivalently
//! `c_u . u + c_v . v = 0` with `c_u = (k1, k2, k5)` and `c_v = (k3, k4, -k5)`.
//! Planes may be anchored at another base state, in which case features are
//! taken after moving that base to the north poles.

use nalgebra::{DMatrix, Vector3};


use crate::dynamics::{rk4_step, FieldConvention, HorizontalPath, RadiusRatio, Sample, Stage, Steering};
use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::state::{transport_to_base, RawState};

/// Admissible `|k . phi|` at the start of a traced curve.
pub const START_TOL: f64 = 1e-10;
/// Below this `hypot(A, B)` the plane does not pick a direction.
pub const DEGENERACY_TOL: f64 = 1e-12;
/// Relative size below which a singular value of the feature matrix counts
/// as zero.
pub const NULL_TOL: f64 = 1e-8;

pub fn contact_features(s: &RawState) -> [f64; 5] {
    let (u, v) = (s.u(), s.v());
    [u.x, u.y, v.x, v.y, u.z - v.z]
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlaneSpec {
    k: [f64; 5],
    base: RawState,
    normal_u: Vec3,
    normal_v: Vec3,
}

impl PlaneSpec {
    /// Normalizes `k`; fails on a zero or non-finite normal.
    pub fn new(k: [f64; 5], base: RawState) -> Result<Self> {
        let norm = k.iter().map(|c| c * c).sum::<f64>().sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::InvalidPlane);
        }
        let k = k.map(|c| c / norm);
        let (g1, g2) = transport_to_base(&base);
        let normal_u = g1.inverse().apply(&Vector3::new(k[0], k[1], k[4]));
        let normal_v = g2.inverse().apply(&Vector3::new(k[2], k[3], -k[4]));
        Ok(Self {
            k,
            base,
            normal_u,
            normal_v,
        })
    }

    /// A plane anchored at the north poles.
    pub fn at_base(k: [f64; 5]) -> Result<Self> {
        Self::new(k, RawState::base())
    }

    pub fn k(&self) -> &[f64; 5] {
        &self.k
    }

    pub fn base(&self) -> &RawState {
        &self.base
    }

    /// The relation as a normal in `(u, v)` space.
    pub fn normal6(&self) -> (Vec3, Vec3) {
        (self.normal_u, self.normal_v)
    }

    /// `k . phi` for the state, in the base-adapted frame.
    pub fn residual(&self, s: &RawState) -> f64 {
        self.normal_u.dot(s.u()) + self.normal_v.dot(s.v())
    }

    /// `(A, B)`: the rates of the residual along `X1` and `X2`.
    fn rates(&self, u: &Vec3, v: &Vec3, a: &Vec3, b: &Vec3, r: f64) -> (f64, f64) {
        let (cu, cv) = (&self.normal_u, &self.normal_v);
        let a_rate = cu.dot(a) + cv.dot(b) / r;
        let b_rate = cu.dot(&u.cross(a)) - cv.dot(&v.cross(b)) / r;
        (a_rate, b_rate)
    }
}

/// Largest `|k . phi|` over the path's samples.
pub fn plane_residual(p: &HorizontalPath, plane: &PlaneSpec) -> f64 {
    p.samples()
        .iter()
        .map(|s| plane.residual(&s.state).abs())
        .fold(0.0, f64::max)
}

/// Largest `|d/dt (k . phi)|` at the samples, using each sample's heading.
pub fn plane_rate(p: &HorizontalPath, plane: &PlaneSpec) -> f64 {
    let r = p.radius().get();
    p.samples()
        .iter()
        .map(|s| {
            let st = &s.state;
            let (a, b) = plane.rates(st.u(), st.v(), st.a(), st.b(), r);
            (a * s.theta.cos() + b * s.theta.sin()).abs()
        })
        .fold(0.0, f64::max)
}

/// Least-squares plane through the contact features of a path.
#[derive(Debug, Clone, PartialEq)]
pub struct PlaneFit {
    pub plane: PlaneSpec,
    /// Singular values of the feature matrix scaled by `1 / sqrt(N)`,
    /// decreasing.
    pub singular_values: [f64; 5],
    pub sigma_min: f64,
    pub sigma_max: f64,
    /// Number of singular values below `NULL_TOL * sigma_max`; more than one
    /// means the relation is not unique.
    pub null_dim: usize,
}

/// Fits `k` as the right singular vector of the smallest singular value of
/// the `N x 5` feature matrix of the samples. The sign of `k` makes its
/// largest-magnitude entry positive.
pub fn fit_plane(p: &HorizontalPath) -> Result<PlaneFit> {
    let n = p.samples().len();
    if n < 5 {
        return Err(Error::DegenerateFit(format!("{n} samples, need at least 5")));
    }
    let rows: Vec<[f64; 5]> = p.samples().iter().map(|s| contact_features(&s.state)).collect();
    let m = DMatrix::from_fn(n, 5, |i, j| rows[i][j]);
    let svd = m.svd(false, true);
    let v_t = svd.v_t.as_ref().expect("requested right singular vectors");
    let scale = 1.0 / (n as f64).sqrt();
    let mut order: Vec<usize> = (0..5).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let sv: [f64; 5] = std::array::from_fn(|i| svd.singular_values[order[i]] * scale);
    if !(sv[0] > 0.0) {
        return Err(Error::DegenerateFit("all contact features vanish".into()));
    }
    let last = order[4];
    let mut k: [f64; 5] = std::array::from_fn(|j| v_t[(last, j)]);
    let lead = (0..5).max_by(|&i, &j| k[i].abs().total_cmp(&k[j].abs())).unwrap();
    if k[lead] < 0.0 {
        k = k.map(|c| -c);
    }
    let null_dim = sv.iter().filter(|&&s| s <= NULL_TOL * sv[0]).count();
    Ok(PlaneFit {
        plane: PlaneSpec::at_base(k)?,
        singular_values: sv,
        sigma_min: sv[4],
        sigma_max: sv[0],
        null_dim,
    })
}

/// Unit heading `(cos, sin)` keeping the residual constant, oriented against
/// `reference` (or by the half-plane rule when there is none).
fn heading(a: f64, b: f64, reference: Option<(f64, f64)>, time: f64) -> Result<(f64, f64)> {
    let norm = a.hypot(b);
    if !(norm > DEGENERACY_TOL) {
        return Err(Error::DegeneratePlane { time });
    }
    let d = (b / norm, -a / norm);
    let flip = match reference {
        Some((rc, rs)) => d.0 * rc + d.1 * rs < 0.0,
        None => d.0 < 0.0 || (d.0 == 0.0 && d.1 < 0.0),
    };
    Ok(if flip { (-d.0, -d.1) } else { d })
}

/// Integrates the horizontal curve whose heading keeps `k . phi` constant.
///
/// At every stage the heading is the unit vector orthogonal to `(A, B)`,
/// the residual's rates along `X1` and `X2`. The first heading has a
/// non-negative cosine; later ones continue the previous heading, so the
/// curve is smooth.
pub fn trace_plane_curve(
    s0: &RawState,
    r: RadiusRatio,
    plane: &PlaneSpec,
    duration: f64,
    step: f64,
) -> Result<HorizontalPath> {
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::InvalidStep(step));
    }
    if !(duration.is_finite() && duration >= 0.0) {
        return Err(Error::InvalidSchedule(format!("duration must be non-negative, got {duration}")));
    }
    let start_residual = plane.residual(s0);
    if !(start_residual.abs() <= START_TOL) {
        return Err(Error::OffPlane { residual: start_residual });
    }
    let rv = r.get();
    let dir_at = |st: &RawState, reference, time| {
        let (a, b) = plane.rates(st.u(), st.v(), st.a(), st.b(), rv);
        heading(a, b, reference, time)
    };

    let n = if duration == 0.0 {
        0
    } else {
        ((duration / step) - 1e-9).ceil().max(1.0) as usize
    };
    let h = if n == 0 { 0.0 } else { duration / n as f64 };
    let mut state = *s0;
    let mut dir = dir_at(&state, None, 0.0)?;
    let mut samples = Vec::with_capacity(n + 1);
    samples.push(Sample {
        t: 0.0,
        state,
        theta: dir.1.atan2(dir.0),
    });
    for m in 1..=n {
        let t0 = (m - 1) as f64 * h;
        let d0 = dir;
        state = rk4_step(&state, h, rv, FieldConvention::ArcLength, |offset, x: &Stage| {
            let (a, b) = plane.rates(&x.u, &x.v, &x.a, &x.b, rv);
            heading(a, b, Some(d0), t0 + offset)
        })?;
        let t = if m == n { duration } else { m as f64 * h };
        dir = dir_at(&state, Some(d0), t)?;
        samples.push(Sample {
            t,
            state,
            theta: dir.1.atan2(dir.0),
        });
    }
    Ok(HorizontalPath::from_parts(
        r,
        samples,
        None,
        Steering::Smooth,
        step,
        FieldConvention::ArcLength,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{roll, ControlSchedule};
    use crate::geometry::{rotate, AxisAngle, UnitVec3};
    use crate::sampling::{random_plane_normal, random_state, seeded};
    use crate::state::act;

    #[test]
    fn base_normal_matches_features() {
        let mut rng = seeded(1);
        let plane = PlaneSpec::at_base(random_plane_normal(&mut rng)).unwrap();
        for _ in 0..20 {
            let s = random_state(&mut rng);
            let phi = contact_features(&s);
            let direct: f64 = plane.k().iter().zip(phi.iter()).map(|(k, f)| k * f).sum();
            assert!((direct - plane.residual(&s)).abs() <= 1e-15);
        }
    }

    #[test]
    fn anchored_plane_is_transported() {
        let mut rng = seeded(2);
        let base = random_state(&mut rng);
        let k = random_plane_normal(&mut rng);
        let plane = PlaneSpec::new(k, base).unwrap();
        assert!(plane.residual(&base).abs() <= 1e-15);
        let (g1, g2) = transport_to_base(&base);
        let at_n = PlaneSpec::at_base(k).unwrap();
        let s = random_state(&mut rng);
        assert!((plane.residual(&s) - at_n.residual(&act(&g1, &g2, &s))).abs() <= 1e-14);
    }

    #[test]
    fn zero_normal_rejected() {
        assert_eq!(PlaneSpec::at_base([0.0; 5]), Err(Error::InvalidPlane));
        assert_eq!(PlaneSpec::at_base([f64::NAN, 0.0, 0.0, 0.0, 1.0]), Err(Error::InvalidPlane));
    }

    #[test]
    fn heading_orientation_rules() {
        // A = 0, B = 1 gives (1, 0) or (-1, 0); the first step takes cos > 0
        assert_eq!(heading(0.0, 1.0, None, 0.0).unwrap(), (1.0, 0.0));
        assert_eq!(heading(0.0, -1.0, None, 0.0).unwrap(), (1.0, 0.0));
        // cos = 0: sin > 0
        assert_eq!(heading(1.0, 0.0, None, 0.0).unwrap(), (0.0, 1.0));
        assert_eq!(heading(0.0, 1.0, Some((-0.5, 0.1)), 0.0).unwrap(), (-1.0, 0.0));
        assert!(matches!(heading(1e-13, 0.0, None, 2.0), Err(Error::DegeneratePlane { time }) if time == 2.0));
    }

    #[test]
    fn traced_curve_stays_on_plane() {
        let mut rng = seeded(3);
        for r in [0.5, 1.0, 2.0] {
            let k = random_plane_normal(&mut rng);
            let plane = PlaneSpec::at_base(k).unwrap();
            let p = trace_plane_curve(&RawState::base(), RadiusRatio::new(r).unwrap(), &plane, 2.0, 1e-3).unwrap();
            assert!(plane_residual(&p, &plane) <= 1e-10, "r = {r}");
            assert!(plane_rate(&p, &plane) <= 1e-9);
            assert!(p.max_invariant_defect() <= 1e-10);
            let fit = fit_plane(&p).unwrap();
            assert!(fit.sigma_min / fit.sigma_max <= 1e-8);
            if r == 1.0 {
                // equal spheres: the curve from the base is a straight roll
                assert_eq!(fit.null_dim, 4);
            } else {
                assert_eq!(fit.null_dim, 1);
                let dot: f64 = fit.plane.k().iter().zip(k.iter()).map(|(a, b)| a * b).sum();
                assert!(1.0 - dot.abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn tracer_rejects_off_plane_start() {
        let plane = PlaneSpec::at_base([1.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        let axis = UnitVec3::e1();
        let u = rotate(&AxisAngle { axis, angle: -0.1 }, &Vec3::z());
        let s = crate::state::make_state(u, Vec3::z(), Vec3::x(), Vec3::x(), 1e-12).unwrap();
        // rotating about e1 keeps u1 = 0: still on the plane
        assert!(trace_plane_curve(&s, RadiusRatio::new(1.0).unwrap(), &plane, 0.1, 1e-3).is_ok());
        let axis = UnitVec3::e2();
        let u = rotate(&AxisAngle { axis, angle: 0.1 }, &Vec3::z());
        let s = crate::state::make_state(u, Vec3::z(), Vec3::y(), Vec3::x(), 1e-12).unwrap();
        assert!(matches!(
            trace_plane_curve(&s, RadiusRatio::new(1.0).unwrap(), &plane, 0.1, 1e-3),
            Err(Error::OffPlane { .. })
        ));
    }

    #[test]
    fn w5_plane_is_degenerate_at_base() {
        let plane = PlaneSpec::at_base([0.0, 0.0, 0.0, 0.0, 1.0]).unwrap();
        assert!(matches!(
            trace_plane_curve(&RawState::base(), RadiusRatio::new(1.0).unwrap(), &plane, 1.0, 1e-3),
            Err(Error::DegeneratePlane { time }) if time == 0.0
        ));
    }

    #[test]
    fn pure_x1_fit_has_two_dim_null_space() {
        let c = ControlSchedule::constant(2.0, 0.0).unwrap();
        let p = roll(&RawState::base(), RadiusRatio::new(2.0).unwrap(), &c, 1e-3).unwrap();
        let fit = fit_plane(&p).unwrap();
        assert!(fit.sigma_min <= 1e-10);
        assert_eq!(fit.null_dim, 2);
        assert!(plane_residual(&p, &fit.plane) <= 1e-10);
    }

    #[test]
    fn fit_needs_five_samples() {
        let c = ControlSchedule::constant(0.002, 0.0).unwrap();
        let p = roll(&RawState::base(), RadiusRatio::new(2.0).unwrap(), &c, 1e-3).unwrap();
        assert!(matches!(fit_plane(&p), Err(Error::DegenerateFit(_))));
    }
}
