//! Vector and rotation primitives.
//!
//! Rotations are evaluated matrix-free with the Rodrigues formula. The
//! handedness is fixed here: a positive angle turns counterclockwise when the
//! axis points at the viewer, so rotating `e1` by `+pi/2` about `e3` gives
//! `e2`. Every sign downstream (gauge shifts, bending, the endpoint Jacobian)
//! inherits this convention.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ambient 3-vector.
pub type Vec3 = Vector3<f64>;

/// Tolerance on `| |v| - 1 |` accepted by [`UnitVec3::new`].
pub const UNIT_TOL: f64 = 1e-12;

pub fn e1() -> Vec3 {
    Vec3::new(1.0, 0.0, 0.0)
}

pub fn e2() -> Vec3 {
    Vec3::new(0.0, 1.0, 0.0)
}

pub fn e3() -> Vec3 {
    Vec3::new(0.0, 0.0, 1.0)
}

/// A 3-vector of unit length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 3]", into = "[f64; 3]")]
pub struct UnitVec3(Vec3);

impl UnitVec3 {
    /// Checked construction; the norm must already be within [`UNIT_TOL`] of one.
    pub fn new(v: Vec3) -> Result<Self> {
        if !v.iter().all(|c| c.is_finite()) {
            return Err(Error::NonFinite("unit vector component"));
        }
        let defect = (v.norm() - 1.0).abs();
        if defect > UNIT_TOL {
            return Err(Error::NotUnit { defect });
        }
        Ok(Self(v))
    }

    /// Normalizes `v`. Fails only for zero or non-finite input.
    pub fn normalize(v: Vec3) -> Result<Self> {
        let n = v.norm();
        if !n.is_finite() {
            return Err(Error::NonFinite("unit vector component"));
        }
        if n == 0.0 {
            return Err(Error::NotUnit { defect: 1.0 });
        }
        Ok(Self(v / n))
    }

    pub(crate) fn new_unchecked(v: Vec3) -> Self {
        Self(v)
    }

    pub fn e1() -> Self {
        Self(e1())
    }

    pub fn e2() -> Self {
        Self(e2())
    }

    pub fn e3() -> Self {
        Self(e3())
    }

    pub fn as_vec(&self) -> &Vec3 {
        &self.0
    }

    pub fn into_inner(self) -> Vec3 {
        self.0
    }
}

impl std::ops::Deref for UnitVec3 {
    type Target = Vec3;

    fn deref(&self) -> &Vec3 {
        &self.0
    }
}

impl TryFrom<[f64; 3]> for UnitVec3 {
    type Error = Error;

    fn try_from(c: [f64; 3]) -> Result<Self> {
        Self::new(Vec3::new(c[0], c[1], c[2]))
    }
}

impl From<UnitVec3> for [f64; 3] {
    fn from(u: UnitVec3) -> Self {
        [u.0.x, u.0.y, u.0.z]
    }
}

/// Rotation by `angle` radians about `axis`, counterclockwise seen from the
/// tip of the axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisAngle {
    pub axis: UnitVec3,
    pub angle: f64,
}

impl AxisAngle {
    pub fn new(axis: UnitVec3, angle: f64) -> Result<Self> {
        if !angle.is_finite() {
            return Err(Error::NonFinite("rotation angle"));
        }
        Ok(Self { axis, angle })
    }

    pub fn inverse(&self) -> Self {
        Self {
            axis: self.axis,
            angle: -self.angle,
        }
    }
}

/// Rodrigues rotation of `x`. The axis itself is returned untouched, so a
/// rotation about a contact point fixes it bit-for-bit.
pub fn rotate(r: &AxisAngle, x: &Vec3) -> Vec3 {
    let k = r.axis.as_vec();
    if x == k {
        return *x;
    }
    let (s, c) = r.angle.sin_cos();
    x * c + k.cross(x) * s + k * (k.dot(x) * (1.0 - c))
}

/// Derivative of `rotate((axis, theta), x)` in `theta` at zero, i.e. `axis x x`.
pub fn rotation_generator(axis: &UnitVec3, x: &Vec3) -> Vec3 {
    axis.cross(x)
}

/// An ordered product of rotations `R_1 R_2 ... R_n`.
///
/// Application follows matrix convention: the rightmost factor acts first.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RotationChain {
    factors: Vec<AxisAngle>,
}

impl RotationChain {
    pub fn identity() -> Self {
        Self::default()
    }

    pub fn from_factors(factors: Vec<AxisAngle>) -> Self {
        Self { factors }
    }

    pub fn factors(&self) -> &[AxisAngle] {
        &self.factors
    }

    /// Appends `r` on the right, so it acts before the existing factors.
    pub fn then_before(mut self, r: AxisAngle) -> Self {
        self.factors.push(r);
        self
    }

    pub fn apply(&self, x: &Vec3) -> Vec3 {
        self.factors.iter().rev().fold(*x, |acc, r| rotate(r, &acc))
    }

    pub fn apply_unit(&self, x: &UnitVec3) -> UnitVec3 {
        UnitVec3::new_unchecked(self.apply(x.as_vec()))
    }

    pub fn inverse(&self) -> Self {
        Self {
            factors: self.factors.iter().map(AxisAngle::inverse).collect(),
        }
        .reversed()
    }

    fn reversed(mut self) -> Self {
        self.factors.reverse();
        self
    }

    /// The rotation taking the orthonormal pair `(from_normal, from_tangent)`
    /// to `(to_normal, to_tangent)`.
    ///
    /// Built as a turn carrying `from_normal` onto `to_normal` followed by a
    /// twist about `to_normal`.
    pub fn aligning(
        from_normal: &UnitVec3,
        from_tangent: &UnitVec3,
        to_normal: &UnitVec3,
        to_tangent: &UnitVec3,
    ) -> Self {
        let n0 = from_normal.as_vec();
        let n1 = to_normal.as_vec();
        let cross = n0.cross(n1);
        let sin = cross.norm();
        let cos = n0.dot(n1);
        let tilt = if sin > 1e-300 {
            Some(AxisAngle {
                axis: UnitVec3::new_unchecked(cross / sin),
                angle: sin.atan2(cos),
            })
        } else if cos < 0.0 {
            // antipodal: any axis orthogonal to n0 works
            Some(AxisAngle {
                axis: UnitVec3::new_unchecked(any_orthogonal(n0)),
                angle: std::f64::consts::PI,
            })
        } else {
            None
        };
        let tilted = match &tilt {
            Some(r) => rotate(r, from_tangent.as_vec()),
            None => *from_tangent.as_vec(),
        };
        let target = to_tangent.as_vec();
        let twist = n1.dot(&tilted.cross(target)).atan2(tilted.dot(target));
        let mut chain = Self::identity().then_before(AxisAngle {
            axis: *to_normal,
            angle: twist,
        });
        if let Some(r) = tilt {
            chain = chain.then_before(r);
        }
        chain
    }
}

/// A unit vector orthogonal to the (nonzero) input.
pub fn any_orthogonal(v: &Vec3) -> Vec3 {
    let pick = if v.x.abs() <= v.y.abs() && v.x.abs() <= v.z.abs() {
        e1()
    } else if v.y.abs() <= v.z.abs() {
        e2()
    } else {
        e3()
    };
    v.cross(&pick).normalize()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn unit_strategy() -> impl Strategy<Value = UnitVec3> {
        (-1.0f64..1.0, 0.0f64..(2.0 * PI)).prop_map(|(z, phi)| {
            let rho = (1.0 - z * z).sqrt();
            UnitVec3::normalize(Vec3::new(rho * phi.cos(), rho * phi.sin(), z)).unwrap()
        })
    }

    #[test]
    fn quarter_turn_about_e3_takes_e1_to_e2() {
        let r = AxisAngle::new(UnitVec3::e3(), FRAC_PI_2).unwrap();
        let y = rotate(&r, &e1());
        assert_abs_diff_eq!(y, e2(), epsilon = 1e-15);
    }

    #[test]
    fn zero_angle_is_identity() {
        let axis = UnitVec3::normalize(Vec3::new(0.3, -0.2, 0.9)).unwrap();
        let x = Vec3::new(0.1, 2.0, -3.0);
        let r = AxisAngle::new(axis, 0.0).unwrap();
        assert_eq!(rotate(&r, &x), x);
    }

    #[test]
    fn axis_is_fixed() {
        let axis = UnitVec3::normalize(Vec3::new(1.0, 2.0, 3.0)).unwrap();
        for theta in [0.3, 1.7, -2.2, 5.9] {
            let r = AxisAngle::new(axis, theta).unwrap();
            assert_abs_diff_eq!(rotate(&r, &axis), *axis, epsilon = 1e-15);
        }
    }

    #[test]
    fn generator_examples() {
        assert_eq!(rotation_generator(&UnitVec3::e3(), &e1()), e2());
        let u = UnitVec3::normalize(Vec3::new(0.2, -0.4, 0.8)).unwrap();
        assert_eq!(rotation_generator(&u, &u), Vec3::zeros());
        // u x e3 = (u2, -u1, 0)
        let g = rotation_generator(&u, &e3());
        assert_abs_diff_eq!(g, Vec3::new(u.y, -u.x, 0.0), epsilon = 1e-16);
    }

    #[test]
    fn unit_construction_rejects_off_norm() {
        assert!(UnitVec3::new(Vec3::new(1.0 + 1e-9, 0.0, 0.0)).is_err());
        assert!(UnitVec3::new(Vec3::new(1.0 + 1e-13, 0.0, 0.0)).is_ok());
        assert!(UnitVec3::normalize(Vec3::zeros()).is_err());
        assert!(UnitVec3::new(Vec3::new(f64::NAN, 0.0, 0.0)).is_err());
    }

    #[test]
    fn chain_applies_rightmost_first() {
        let a = AxisAngle::new(UnitVec3::e3(), FRAC_PI_2).unwrap();
        let b = AxisAngle::new(UnitVec3::e1(), FRAC_PI_2).unwrap();
        let chain = RotationChain::from_factors(vec![a, b]);
        // b takes e2 to e3, a leaves e3 fixed
        assert_abs_diff_eq!(chain.apply(&e2()), e3(), epsilon = 1e-15);
        let back = chain.inverse().apply(&chain.apply(&Vec3::new(0.3, 0.1, -0.7)));
        assert_abs_diff_eq!(back, Vec3::new(0.3, 0.1, -0.7), epsilon = 1e-15);
    }

    #[test]
    fn aligning_handles_antipodal_normal() {
        let chain = RotationChain::aligning(
            &UnitVec3::normalize(-e3()).unwrap(),
            &UnitVec3::e2(),
            &UnitVec3::e3(),
            &UnitVec3::e1(),
        );
        assert_abs_diff_eq!(chain.apply(&-e3()), e3(), epsilon = 1e-15);
        assert_abs_diff_eq!(chain.apply(&e2()), e1(), epsilon = 1e-15);
    }

    proptest! {
        #[test]
        fn rotation_preserves_norms_and_dots(
            axis in unit_strategy(),
            angle in -2.0 * PI..2.0 * PI,
            x in unit_strategy(),
            y in unit_strategy(),
        ) {
            let r = AxisAngle::new(axis, angle).unwrap();
            let (rx, ry) = (rotate(&r, &x), rotate(&r, &y));
            prop_assert!((rx.norm() - 1.0).abs() <= 1e-13);
            prop_assert!((rx.dot(&ry) - x.dot(&y)).abs() <= 1e-13);
        }

        #[test]
        fn rotation_angles_add(
            axis in unit_strategy(),
            alpha in -PI..PI,
            beta in -PI..PI,
            x in unit_strategy(),
        ) {
            let ra = AxisAngle::new(axis, alpha).unwrap();
            let rb = AxisAngle::new(axis, beta).unwrap();
            let rab = AxisAngle::new(axis, alpha + beta).unwrap();
            let lhs = rotate(&ra, &rotate(&rb, &x));
            prop_assert!((lhs - rotate(&rab, &x)).norm() <= 1e-12);
        }

        #[test]
        fn generator_matches_central_difference(axis in unit_strategy(), x in unit_strategy()) {
            let h = 1e-4;
            let plus = rotate(&AxisAngle::new(axis, h).unwrap(), &x);
            let minus = rotate(&AxisAngle::new(axis, -h).unwrap(), &x);
            let fd = (plus - minus) / (2.0 * h);
            // truncation is |x|/6 h^2; allow roundoff 1e-12/h on top
            prop_assert!((fd - rotation_generator(&axis, &x)).norm() <= h * h / 6.0 + 1e-11);
        }

        #[test]
        fn aligning_maps_frames(n0 in unit_strategy(), t0 in unit_strategy(), n1 in unit_strategy(), t1 in unit_strategy()) {
            let orth = |n: &UnitVec3, t: &UnitVec3| {
                let p = t.as_vec() - n.as_vec() * n.dot(t);
                UnitVec3::normalize(p)
            };
            let (Ok(t0), Ok(t1)) = (orth(&n0, &t0), orth(&n1, &t1)) else { return Ok(()); };
            let chain = RotationChain::aligning(&n0, &t0, &n1, &t1);
            prop_assert!((chain.apply(&n0) - *n1).norm() <= 1e-12);
            prop_assert!((chain.apply(&t0) - *t1).norm() <= 1e-12);
        }
    }
}
