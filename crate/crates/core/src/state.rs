//! Rolling configurations, their gauge freedom, the symmetry action and the
//! coordinate chart centered at the base state.
//!
//! A configuration is a 4-tuple `(u, v, a, b)`: `u` is the contact point on
//! the unit sphere, `r v` the contact point on the sphere of radius `r`, and
//! `a`, `b` are unit tangent markers at `u` and `v`. Two tuples with the same
//! contact pair describe the same state when their markers differ by the
//! gauge rotation `(a, b) -> (R_u^t a, R_v^-t b)`. The spheres are assumed to
//! touch externally, which fixes the minus sign on the `v` side.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{e1, rotate, AxisAngle, RotationChain, UnitVec3, Vec3};

/// Default tolerance for [`make_state`].
pub const CONSTRUCTION_TOL: f64 = 1e-12;
/// Default tolerance for [`equivalent`].
pub const EQUIVALENCE_TOL: f64 = 1e-9;
/// Admissible invariant drift along integrated paths.
pub const DRIFT_TOL: f64 = 1e-10;

/// One gauge representative of a rolling configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawState {
    u: UnitVec3,
    v: UnitVec3,
    a: UnitVec3,
    b: UnitVec3,
}

impl RawState {
    /// Both spheres touching at their north poles, markers along `+x`.
    pub fn base() -> Self {
        Self {
            u: UnitVec3::e3(),
            v: UnitVec3::e3(),
            a: UnitVec3::e1(),
            b: UnitVec3::e1(),
        }
    }

    pub fn u(&self) -> &Vec3 {
        self.u.as_vec()
    }

    pub fn v(&self) -> &Vec3 {
        self.v.as_vec()
    }

    pub fn a(&self) -> &Vec3 {
        self.a.as_vec()
    }

    pub fn b(&self) -> &Vec3 {
        self.b.as_vec()
    }

    pub fn u_unit(&self) -> &UnitVec3 {
        &self.u
    }

    pub fn v_unit(&self) -> &UnitVec3 {
        &self.v
    }

    pub fn a_unit(&self) -> &UnitVec3 {
        &self.a
    }

    pub fn b_unit(&self) -> &UnitVec3 {
        &self.b
    }

    /// Flat record `u1 u2 u3 v1 v2 v3 a1 a2 a3 b1 b2 b3`.
    pub fn to_array(&self) -> [f64; 12] {
        let mut out = [0.0; 12];
        for (k, w) in [self.u(), self.v(), self.a(), self.b()].iter().enumerate() {
            out[3 * k..3 * k + 3].copy_from_slice(w.as_slice());
        }
        out
    }

    /// Parses the flat 12-real record through [`make_state`].
    pub fn from_array(c: &[f64; 12], tol: f64) -> Result<Self> {
        let w = |k: usize| Vec3::new(c[3 * k], c[3 * k + 1], c[3 * k + 2]);
        make_state(w(0), w(1), w(2), w(3), tol)
    }

    /// Largest violation of the unit-norm and tangency invariants.
    pub fn invariant_defect(&self) -> f64 {
        [
            (self.u().norm() - 1.0).abs(),
            (self.v().norm() - 1.0).abs(),
            (self.a().norm() - 1.0).abs(),
            (self.b().norm() - 1.0).abs(),
            self.u().dot(self.a()).abs(),
            self.v().dot(self.b()).abs(),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    /// Max-abs difference over the twelve components.
    pub fn sup_distance(&self, other: &Self) -> f64 {
        self.to_array()
            .iter()
            .zip(other.to_array().iter())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }

    /// Renormalizes the contact points and re-orthogonalizes the markers
    /// without any tolerance check. Used after integrator steps.
    pub(crate) fn project(u: Vec3, v: Vec3, a: Vec3, b: Vec3) -> Result<Self> {
        let finite = [u, v, a, b]
            .iter()
            .all(|w| w.iter().all(|c| c.is_finite()));
        if !finite {
            return Err(Error::NonFinite("integrated state"));
        }
        let u = u.normalize();
        let v = v.normalize();
        let a = (a - u * u.dot(&a)).normalize();
        let b = (b - v * v.dot(&b)).normalize();
        Ok(Self {
            u: UnitVec3::new_unchecked(u),
            v: UnitVec3::new_unchecked(v),
            a: UnitVec3::new_unchecked(a),
            b: UnitVec3::new_unchecked(b),
        })
    }

    pub(crate) fn from_units(u: UnitVec3, v: UnitVec3, a: UnitVec3, b: UnitVec3) -> Self {
        Self { u, v, a, b }
    }
}

/// Validates four raw vectors as a state.
///
/// Violations up to `tol` are repaired (renormalization, projection of the
/// markers onto the tangent planes); larger ones are rejected.
pub fn make_state(u: Vec3, v: Vec3, a: Vec3, b: Vec3, tol: f64) -> Result<RawState> {
    if ![u, v, a, b].iter().all(|w| w.iter().all(|c| c.is_finite())) {
        return Err(Error::NonFinite("state component"));
    }
    let checks = [
        ("|u| = 1", (u.norm() - 1.0).abs()),
        ("|v| = 1", (v.norm() - 1.0).abs()),
        ("|a| = 1", (a.norm() - 1.0).abs()),
        ("|b| = 1", (b.norm() - 1.0).abs()),
        ("u . a = 0", u.dot(&a).abs()),
        ("v . b = 0", v.dot(&b).abs()),
    ];
    for (invariant, violation) in checks {
        if violation > tol {
            return Err(Error::InvalidState {
                invariant,
                violation,
                tol,
            });
        }
    }
    RawState::project(u, v, a, b)
}

/// Rotates the markers along the gauge orbit: `(a, b) -> (R_u^t a, R_v^-t b)`.
pub fn gauge_shift(s: &RawState, theta: f64) -> RawState {
    let a = rotate(&AxisAngle { axis: s.u, angle: theta }, s.a());
    let b = rotate(&AxisAngle { axis: s.v, angle: -theta }, s.b());
    RawState {
        a: UnitVec3::new_unchecked(a),
        b: UnitVec3::new_unchecked(b),
        ..*s
    }
}

/// Whether two tuples represent the same state.
pub fn equivalent(s1: &RawState, s2: &RawState, tol: f64) -> bool {
    equivalence_defect(s1, s2) <= tol
}

/// Largest violation among the conditions tested by [`equivalent`].
pub fn equivalence_defect(s1: &RawState, s2: &RawState) -> f64 {
    let du = (s1.u() - s2.u()).amax();
    let dv = (s1.v() - s2.v()).amax();
    let cos_gap = (s1.a().dot(s2.a()) - s1.b().dot(s2.b())).abs();
    let sin_gap = (s1.a().dot(&s1.u().cross(s2.a())) + s1.b().dot(&s1.v().cross(s2.b()))).abs();
    du.max(dv).max(cos_gap).max(sin_gap)
}

/// The symmetry action `(u, v, a, b) -> (g1 u, g2 v, g1 a, g2 b)`.
pub fn act(g1: &RotationChain, g2: &RotationChain, s: &RawState) -> RawState {
    RawState {
        u: g1.apply_unit(&s.u),
        v: g2.apply_unit(&s.v),
        a: g1.apply_unit(&s.a),
        b: g2.apply_unit(&s.b),
    }
}

/// The pair `(g1, g2)` whose action takes `s` to the base tuple exactly.
pub fn transport_to_base(s: &RawState) -> (RotationChain, RotationChain) {
    let g1 = RotationChain::aligning(&s.u, &s.a, &UnitVec3::e3(), &UnitVec3::e1());
    let g2 = RotationChain::aligning(&s.v, &s.b, &UnitVec3::e3(), &UnitVec3::e1());
    (g1, g2)
}

/// Coordinates `(w1, ..., w5)` of a state near the base state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChartCoords(pub [f64; 5]);

impl ChartCoords {
    pub fn as_array(&self) -> &[f64; 5] {
        &self.0
    }

    pub fn distance(&self, other: &Self) -> f64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt()
    }
}

/// The fifth coordinate exactly as the closed form reads:
/// `(a1 u3 - a3 u1) b2 + (b1 u3 - b3 u2) a2`.
///
/// Evaluated on whatever representative it is given.
pub fn w5_formula(s: &RawState) -> f64 {
    let (u, a, b) = (s.u(), s.a(), s.b());
    (a.x * u.z - a.z * u.x) * b.y + (b.x * u.z - b.z * u.y) * a.y
}

/// The gauge representative whose `a` is the unit tangent projection of `e1`.
pub fn canonical_gauge(s: &RawState) -> Result<RawState> {
    let u = s.u();
    let p = e1() - u * u.x;
    let norm = p.norm();
    if norm <= 1e-8 {
        return Err(Error::DegenerateGauge);
    }
    let p = p / norm;
    let theta = u.cross(s.a()).dot(&p).atan2(s.a().dot(&p));
    let b = rotate(&AxisAngle { axis: s.v, angle: -theta }, s.b());
    Ok(RawState {
        a: UnitVec3::new_unchecked(p),
        b: UnitVec3::new_unchecked(b),
        ..*s
    })
}

/// Chart coordinates centered at the base state. Requires `u3 > 0` and
/// `v3 > 0`; `w5` is read off the canonical representative so the result
/// does not depend on the tuple chosen for the state.
pub fn chart_coords(s: &RawState) -> Result<ChartCoords> {
    let (u, v) = (s.u(), s.v());
    if !(u.z > 0.0 && v.z > 0.0) {
        return Err(Error::OutsideChart { u3: u.z, v3: v.z });
    }
    let canon = canonical_gauge(s)?;
    Ok(ChartCoords([u.x, u.y, v.x, v.y, w5_formula(&canon)]))
}

/// Equivalence defect against the base state.
pub fn base_defect(s: &RawState) -> f64 {
    equivalence_defect(s, &RawState::base())
}
