//! Five-point bending of a horizontal path and the endpoint map it induces.
//!
//! For break times `t1 < ... < t5` and angles `alpha`, the bent path on
//! `(t_j, t_{j+1}]` is the original path moved by the product
//! `R_{u(t1)}^{alpha_1} ... R_{u(t_j)}^{alpha_j}` on the first sphere (applied
//! to `u` and `a`) and `R_{v(t1)}^{-alpha_1} ... R_{v(t_j)}^{-alpha_j}` on the
//! second (applied to `v` and `b`). Rotation axes are the contact points of
//! the unbent path. Each rotation fixes its own axis, so contact points stay
//! continuous, while the markers jump by a gauge shift; the class of the
//! state is continuous and the length is untouched.

use nalgebra::{Matrix5, SVD};
use serde::{Deserialize, Serialize};

use crate::dynamics::{HorizontalPath, Sample};
use crate::error::{Error, Result};
use crate::geometry::{AxisAngle, RotationChain, UnitVec3};
use crate::state::{act, base_defect, chart_coords, ChartCoords, RawState};

/// Admissible distance between the path's state at the horizon and the base
/// state.
pub const BASE_TOL: f64 = 1e-8;
/// Central-difference step for the finite-difference Jacobian (radians).
pub const FD_STEP: f64 = 1e-5;

/// Break times and bend angles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BendSpec {
    pub times: [f64; 5],
    pub angles: [f64; 5],
}

impl BendSpec {
    pub fn new(times: [f64; 5], angles: [f64; 5]) -> Self {
        Self { times, angles }
    }

    /// Checks strict ordering and that every time lies in `(0, horizon)`.
    pub fn validate(&self, horizon: f64) -> Result<()> {
        validate_times(&self.times, horizon)?;
        if !self.angles.iter().all(|a| a.is_finite()) {
            return Err(Error::InvalidBend("non-finite angle".into()));
        }
        Ok(())
    }
}

pub(crate) fn validate_times(times: &[f64; 5], horizon: f64) -> Result<()> {
    if !times.iter().all(|t| t.is_finite()) {
        return Err(Error::InvalidBend("non-finite break time".into()));
    }
    if !times.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::InvalidBend(format!("break times {times:?} are not strictly increasing")));
    }
    if !(times[0] > 0.0 && times[4] < horizon) {
        return Err(Error::InvalidBend(format!(
            "break times {times:?} must lie strictly inside (0, {horizon})"
        )));
    }
    Ok(())
}

/// The accumulated rotations in force on each of the six pieces
/// `[0, t1], (t1, t2], ..., (t5, end]`.
fn piece_rotations(axes_u: &[UnitVec3; 5], axes_v: &[UnitVec3; 5], angles: &[f64; 5]) -> Vec<(RotationChain, RotationChain)> {
    let mut out = Vec::with_capacity(6);
    let mut g1 = RotationChain::identity();
    let mut g2 = RotationChain::identity();
    out.push((g1.clone(), g2.clone()));
    for j in 0..5 {
        g1 = g1.then_before(AxisAngle { axis: axes_u[j], angle: angles[j] });
        g2 = g2.then_before(AxisAngle { axis: axes_v[j], angle: -angles[j] });
        out.push((g1.clone(), g2.clone()));
    }
    out
}

fn contact_axes(p: &HorizontalPath, times: &[f64; 5]) -> Result<([UnitVec3; 5], [UnitVec3; 5])> {
    let mut axes_u = [UnitVec3::e3(); 5];
    let mut axes_v = [UnitVec3::e3(); 5];
    for (j, &t) in times.iter().enumerate() {
        let s = p.state_at(t)?;
        axes_u[j] = *s.u_unit();
        axes_v[j] = *s.v_unit();
    }
    Ok((axes_u, axes_v))
}

/// The bent path.
///
/// Breaks with a zero angle are no breaks at all and are not recorded; in
/// particular a zero `alpha` returns the input samples unchanged. Break times
/// that are not sample times are inserted as samples carrying the
/// left-continuous value.
pub fn bend(p: &HorizontalPath, spec: &BendSpec) -> Result<HorizontalPath> {
    spec.validate(p.end_time())?;
    let (axes_u, axes_v) = contact_axes(p, &spec.times)?;
    let pieces = piece_rotations(&axes_u, &axes_v, &spec.angles);
    let piece_of = |t: f64| spec.times.iter().take_while(|&&b| b < t).count();

    let active: Vec<f64> = spec
        .times
        .iter()
        .zip(spec.angles.iter())
        .filter(|(_, &a)| a != 0.0)
        .map(|(&t, _)| t)
        .collect();

    let mut inserts: Vec<Sample> = Vec::new();
    for &t in &active {
        if !p.samples().iter().any(|s| s.t == t) {
            let (g1, g2) = &pieces[piece_of(t)];
            inserts.push(Sample {
                t,
                state: act(g1, g2, &p.state_at(t)?),
                theta: p.theta_at(t),
            });
        }
    }

    let mut samples: Vec<Sample> = p
        .samples()
        .iter()
        .map(|s| {
            let (g1, g2) = &pieces[piece_of(s.t)];
            Sample {
                state: act(g1, g2, &s.state),
                ..*s
            }
        })
        .chain(inserts)
        .collect();
    samples.sort_by(|x, y| x.t.total_cmp(&y.t));

    let mut breaks: Vec<f64> = p.breaks().iter().copied().chain(active).collect();
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    Ok(p.with_samples_and_breaks(samples, breaks))
}

/// Left and right limits of the bent path at each break time.
pub fn break_limits(p: &HorizontalPath, spec: &BendSpec) -> Result<[(RawState, RawState); 5]> {
    spec.validate(p.end_time())?;
    let (axes_u, axes_v) = contact_axes(p, &spec.times)?;
    let pieces = piece_rotations(&axes_u, &axes_v, &spec.angles);
    let mut out = [(RawState::base(), RawState::base()); 5];
    for (j, &t) in spec.times.iter().enumerate() {
        let s = p.state_at(t)?;
        let (l1, l2) = &pieces[j];
        let (r1, r2) = &pieces[j + 1];
        out[j] = (act(l1, l2, &s), act(r1, r2, &s));
    }
    Ok(out)
}

/// How a Jacobian was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum JacobianMode {
    Analytic,
    FiniteDifference,
}

/// `matrix[i][j] = d omega_j / d alpha_i`, with singular values in
/// decreasing order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OmegaJacobian {
    pub mode: JacobianMode,
    pub matrix: [[f64; 5]; 5],
    pub singular_values: [f64; 5],
}

impl OmegaJacobian {
    pub fn new(mode: JacobianMode, matrix: [[f64; 5]; 5]) -> Self {
        let singular_values = singular_values(&matrix);
        Self {
            mode,
            matrix,
            singular_values,
        }
    }

    pub(crate) fn to_matrix(&self) -> Matrix5<f64> {
        Matrix5::from_fn(|i, j| self.matrix[i][j])
    }
}

pub fn singular_values(m: &[[f64; 5]; 5]) -> [f64; 5] {
    let mat = Matrix5::from_fn(|i, j| m[i][j]);
    let mut sv: Vec<f64> = SVD::new(mat, false, false).singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    [sv[0], sv[1], sv[2], sv[3], sv[4]]
}

/// `sigma_5 / sigma_1`; zero for the zero matrix.
pub fn singularity_measure(j: &OmegaJacobian) -> f64 {
    let sv = &j.singular_values;
    if sv[0] == 0.0 {
        0.0
    } else {
        sv[4] / sv[0]
    }
}

/// The map from bend angles to chart coordinates of the bent path at a fixed
/// horizon `T`.
///
/// Only the contact points at the five break times and the state at `T`
/// enter, so evaluation does not rebuild the path.
#[derive(Debug, Clone)]
pub struct EndpointMap {
    times: [f64; 5],
    horizon: f64,
    radius: f64,
    axes_u: [UnitVec3; 5],
    axes_v: [UnitVec3; 5],
    endpoint: RawState,
}

impl EndpointMap {
    /// Requires `p(horizon)` to be the base state within [`BASE_TOL`].
    pub fn new(p: &HorizontalPath, times: [f64; 5], horizon: f64) -> Result<Self> {
        let map = Self::unchecked(p, times, horizon)?;
        let defect = base_defect(&map.endpoint);
        if defect > BASE_TOL {
            return Err(Error::NotAtBase { time: horizon, defect });
        }
        Ok(map)
    }

    /// As [`EndpointMap::new`] without the base-state requirement.
    pub fn unchecked(p: &HorizontalPath, times: [f64; 5], horizon: f64) -> Result<Self> {
        if !(horizon <= p.end_time()) {
            return Err(Error::TimeOutOfRange { time: horizon, end: p.end_time() });
        }
        validate_times(&times, horizon)?;
        let (axes_u, axes_v) = contact_axes(p, &times)?;
        Ok(Self {
            times,
            horizon,
            radius: p.radius().get(),
            axes_u,
            axes_v,
            endpoint: p.state_at(horizon)?,
        })
    }

    pub fn times(&self) -> &[f64; 5] {
        &self.times
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn axes(&self) -> (&[UnitVec3; 5], &[UnitVec3; 5]) {
        (&self.axes_u, &self.axes_v)
    }

    /// The bent path's raw state at the horizon.
    pub fn endpoint(&self, alpha: &[f64; 5]) -> RawState {
        let pieces = piece_rotations(&self.axes_u, &self.axes_v, alpha);
        let (g1, g2) = &pieces[5];
        act(g1, g2, &self.endpoint)
    }

    pub fn omega(&self, alpha: &[f64; 5]) -> Result<ChartCoords> {
        chart_coords(&self.endpoint(alpha))
    }

    /// Rows `(u2, -u1, -v2, v1, u3 - v3)` at the break times: the first-order
    /// coefficients of the implemented chart when the horizon state is the
    /// base state.
    pub fn analytic_jacobian(&self) -> OmegaJacobian {
        let mut m = [[0.0; 5]; 5];
        for i in 0..5 {
            let (u, v) = (self.axes_u[i].as_vec(), self.axes_v[i].as_vec());
            m[i] = [u.y, -u.x, -v.y, v.x, u.z - v.z];
        }
        OmegaJacobian::new(JacobianMode::Analytic, m)
    }

    /// Central differences of [`EndpointMap::omega`] about `alpha`.
    pub fn fd_jacobian_at(&self, alpha: &[f64; 5], h: f64) -> Result<OmegaJacobian> {
        let mut m = [[0.0; 5]; 5];
        for i in 0..5 {
            let mut plus = *alpha;
            let mut minus = *alpha;
            plus[i] += h;
            minus[i] -= h;
            let (wp, wm) = (self.omega(&plus)?, self.omega(&minus)?);
            for j in 0..5 {
                m[i][j] = (wp.0[j] - wm.0[j]) / (2.0 * h);
            }
        }
        Ok(OmegaJacobian::new(JacobianMode::FiniteDifference, m))
    }

    pub fn jacobian(&self, mode: JacobianMode) -> Result<OmegaJacobian> {
        match mode {
            JacobianMode::Analytic => Ok(self.analytic_jacobian()),
            JacobianMode::FiniteDifference => self.fd_jacobian_at(&[0.0; 5], FD_STEP),
        }
    }
}

/// `omega(p, times, alpha)` at the path's final time.
pub fn omega(p: &HorizontalPath, times: [f64; 5], alpha: &[f64; 5]) -> Result<ChartCoords> {
    EndpointMap::new(p, times, p.end_time())?.omega(alpha)
}

/// The endpoint Jacobian at `alpha = 0`, horizon at the path's final time.
pub fn omega_jacobian(p: &HorizontalPath, times: [f64; 5], mode: JacobianMode) -> Result<OmegaJacobian> {
    EndpointMap::new(p, times, p.end_time())?.jacobian(mode)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{arc_length, roll, ControlSchedule, RadiusRatio};
    use crate::sampling::{random_schedule, random_state, seeded};
    use crate::state::{equivalence_defect, EQUIVALENCE_TOL};

    fn generic_path(seed: u64, r: f64) -> HorizontalPath {
        let mut rng = seeded(seed);
        let c = random_schedule(&mut rng, 4, 3.0);
        let p = roll(&random_state(&mut rng), RadiusRatio::new(r).unwrap(), &c, 1e-3).unwrap();
        p.transported_to_base(p.end_time()).unwrap()
    }

    #[test]
    fn zero_bend_is_identity() {
        let p = generic_path(1, 1.4);
        let q = bend(&p, &BendSpec::new([0.3, 0.9, 1.4, 2.0, 2.5], [0.0; 5])).unwrap();
        assert_eq!(q.samples(), p.samples());
        assert!(q.breaks().is_empty());
    }

    #[test]
    fn single_bend_rotates_tail() {
        let p = generic_path(2, 0.8);
        let times = [0.3, 0.9, 1.4, 2.0, 2.5055];
        let spec = BendSpec::new(times, [0.0, 0.0, 0.0, 0.0, 0.3]);
        let q = bend(&p, &spec).unwrap();
        let axis = *p.state_at(2.5055).unwrap().u_unit();
        let r = AxisAngle { axis, angle: 0.3 };
        for (orig, bent) in p.samples().iter().zip(q.samples().iter().filter(|s| s.t != 2.5055)) {
            assert_eq!(orig.t, bent.t);
            if orig.t > 2.5055 {
                let expect = crate::geometry::rotate(&r, orig.state.u());
                assert!((expect - bent.state.u()).amax() <= 1e-15);
            } else {
                assert_eq!(orig.state, bent.state);
            }
        }
        let limits = break_limits(&p, &spec).unwrap();
        let (left, right) = limits[4];
        assert!(equivalence_defect(&left, &right) <= 1e-12);
        assert_eq!(arc_length(&q), arc_length(&p));
    }

    #[test]
    fn bent_path_reintegrates_inside_pieces() {
        let p = generic_path(3, 1.7);
        let spec = BendSpec::new([0.2505, 0.9, 1.4, 2.0, 2.5], [0.2, -0.1, 0.3, 0.05, -0.25]);
        let q = bend(&p, &spec).unwrap();
        let limits = break_limits(&p, &spec).unwrap();
        for (j, &t) in spec.times.iter().enumerate() {
            let at = q.state_at(t).unwrap();
            assert!(at.sup_distance(&limits[j].0) <= 1e-15);
            // just after the break the state follows the right limit
            let after = q.state_at(t + 1e-7).unwrap();
            assert!(after.sup_distance(&limits[j].1) <= 1e-6);
            assert!((after.u() - limits[j].1.u()).norm() <= 2e-7);
        }
        // between samples the bent path agrees with bending the re-integrated state
        for t in [0.1234, 1.00049, 2.77777] {
            let piece = spec.times.iter().take_while(|&&b| b < t).count();
            let (axes_u, axes_v) = contact_axes(&p, &spec.times).unwrap();
            let (g1, g2) = &piece_rotations(&axes_u, &axes_v, &spec.angles)[piece];
            let expect = act(g1, g2, &p.state_at(t).unwrap());
            assert!(q.state_at(t).unwrap().sup_distance(&expect) <= 1e-13);
        }
    }

    #[test]
    fn bend_rejects_bad_times() {
        let p = generic_path(4, 1.0);
        let end = p.end_time();
        for times in [[0.0, 0.5, 1.0, 1.5, 2.0], [0.1, 0.5, 0.5, 1.5, 2.0], [0.1, 0.5, 1.0, 1.5, end]] {
            assert!(matches!(
                bend(&p, &BendSpec::new(times, [0.1; 5])),
                Err(Error::InvalidBend(_))
            ));
        }
    }

    #[test]
    fn omega_vanishes_at_zero_and_matches_bent_endpoint() {
        let p = generic_path(5, 2.0);
        let times = [0.4, 0.8, 1.5, 2.1, 2.6];
        let map = EndpointMap::new(&p, times, p.end_time()).unwrap();
        assert!(map.omega(&[0.0; 5]).unwrap().0.iter().all(|w| w.abs() <= 1e-15));
        let alpha = [0.01, -0.02, 0.015, 0.005, -0.01];
        let q = bend(&p, &BendSpec::new(times, alpha)).unwrap();
        let w = chart_coords(q.end()).unwrap();
        assert!(w.distance(&map.omega(&alpha).unwrap()) <= 1e-15);
    }

    #[test]
    fn first_order_omega1_is_u2() {
        let p = generic_path(6, 0.7);
        let times = [0.4, 0.8, 1.5, 2.1, 2.6];
        let map = EndpointMap::new(&p, times, p.end_time()).unwrap();
        for i in 0..5 {
            let eps = 1e-6;
            let mut alpha = [0.0; 5];
            alpha[i] = eps;
            let w1 = map.omega(&alpha).unwrap().0[0];
            let u2 = p.state_at(times[i]).unwrap().u().y;
            assert!((w1 - eps * u2).abs() <= 2.0 * eps * eps);
        }
    }

    #[test]
    fn analytic_matches_fd() {
        for seed in 10..14 {
            let p = generic_path(seed, 0.5 + seed as f64 * 0.2);
            let times = [0.35, 0.9, 1.45, 2.05, 2.7];
            let map = EndpointMap::new(&p, times, p.end_time()).unwrap();
            let an = map.jacobian(JacobianMode::Analytic).unwrap();
            let fd = map.jacobian(JacobianMode::FiniteDifference).unwrap();
            for i in 0..5 {
                for j in 0..5 {
                    let (x, y) = (an.matrix[i][j], fd.matrix[i][j]);
                    assert!((x - y).abs() <= (1e-6 * x.abs()).max(1e-9), "{i}{j}: {x} vs {y}");
                }
            }
        }
    }

    #[test]
    fn pure_x1_columns_vanish() {
        let c = ControlSchedule::constant(3.0, 0.0).unwrap();
        let p = roll(&RawState::base(), RadiusRatio::new(2.0).unwrap(), &c, 1e-3).unwrap();
        let p = p.transported_to_base(3.0).unwrap();
        let j = omega_jacobian(&p, [0.3, 0.9, 1.5, 2.0, 2.7], JacobianMode::Analytic).unwrap();
        for row in j.matrix {
            assert!(row[0].abs() <= 1e-15 && row[2].abs() <= 1e-15);
        }
        assert!(singularity_measure(&j) <= 1e-15);
        // first-order vanishing of omega_1 and omega_3 in every angle
        let map = EndpointMap::new(&p, [0.3, 0.9, 1.5, 2.0, 2.7], 3.0).unwrap();
        for i in 0..5 {
            let mut alpha = [0.0; 5];
            alpha[i] = 1e-5;
            let w = map.omega(&alpha).unwrap().0;
            assert!(w[0].abs() <= 1e-9 && w[2].abs() <= 1e-9);
        }
    }

    #[test]
    fn singularity_measure_basics() {
        let mut id = [[0.0; 5]; 5];
        for (i, row) in id.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        assert_eq!(singularity_measure(&OmegaJacobian::new(JacobianMode::Analytic, id)), 1.0);
        let mut col = id;
        for row in col.iter_mut() {
            row[2] = 0.0;
        }
        assert_eq!(singularity_measure(&OmegaJacobian::new(JacobianMode::Analytic, col)), 0.0);
        let zero = OmegaJacobian::new(JacobianMode::Analytic, [[0.0; 5]; 5]);
        assert_eq!(singularity_measure(&zero), 0.0);
    }

    #[test]
    fn endpoint_map_requires_base_state() {
        let mut rng = seeded(20);
        let c = random_schedule(&mut rng, 3, 2.0);
        let p = roll(&random_state(&mut rng), RadiusRatio::new(1.0).unwrap(), &c, 1e-3).unwrap();
        assert!(matches!(
            EndpointMap::new(&p, [0.2, 0.6, 1.0, 1.4, 1.8], p.end_time()),
            Err(Error::NotAtBase { .. })
        ));
        let _ = EQUIVALENCE_TOL;
    }
}
