//! Audit of the endpoint Jacobian against the commonly quoted closed forms.
//!
//! The quoted first-order formulas for bending at `t_i` with the endpoint at
//! the base state are
//!
//! ```text
//! du/dalpha = (u2, -u1, 0)        dv/dalpha = (-r v2, r v1, 0)
//! da/dalpha = (0, u3, u2)         db/dalpha = (0, -v3, -v2)
//! row i     = (u2, -u1, -r v2, r v1, u3 - v3)
//! ```
//!
//! evaluated at `u(t_i)`, `v(t_i)`. Rotating about `v(t_i)` leaves no room
//! for a factor `r`, and the rotated markers pick up `-u2` and `+v2` in their
//! last entries; the audit measures every entry by central differences and
//! classifies each disagreement.

use serde::{Deserialize, Serialize};

use crate::bending::{EndpointMap, JacobianMode, OmegaJacobian, FD_STEP};
use crate::error::Result;
use crate::geometry::Vec3;

/// Why a quoted entry disagrees with the measured one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DeviationCategory {
    /// A spurious factor `r` on second-sphere quantities.
    RadiusScaling,
    /// A flipped sign in the last entry of a marker derivative.
    MarkerDerivativeSign,
    Unexpected,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Deviation {
    /// Bend index (0-based).
    pub bend: usize,
    /// Which quantity, e.g. `"J[2][3]"` or `"da[2]"`.
    pub entry: String,
    pub quoted: f64,
    pub measured: f64,
    pub category: DeviationCategory,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JacobianAudit {
    pub times: [f64; 5],
    pub radius: f64,
    pub analytic: OmegaJacobian,
    pub finite_difference: OmegaJacobian,
    pub quoted: OmegaJacobian,
    /// Largest `|fd - analytic| / max(|analytic|, 1e-3)` over all entries.
    pub max_relative_disagreement: f64,
    pub singularity: f64,
    pub deviations: Vec<Deviation>,
}

/// The quoted row for a bend at contact points `u`, `v`.
pub fn quoted_row(u: &Vec3, v: &Vec3, r: f64) -> [f64; 5] {
    [u.y, -u.x, -r * v.y, r * v.x, u.z - v.z]
}

/// Quoted derivatives of `(u, v, a, b)` at the endpoint.
pub fn quoted_endpoint_derivatives(u: &Vec3, v: &Vec3, r: f64) -> [Vec3; 4] {
    [
        Vec3::new(u.y, -u.x, 0.0),
        Vec3::new(-r * v.y, r * v.x, 0.0),
        Vec3::new(0.0, u.z, u.y),
        Vec3::new(0.0, -v.z, -v.y),
    ]
}

/// Central differences of the raw endpoint vectors in `alpha_i` at zero.
pub fn measured_endpoint_derivatives(map: &EndpointMap, i: usize, h: f64) -> [Vec3; 4] {
    let mut plus = [0.0; 5];
    let mut minus = [0.0; 5];
    plus[i] = h;
    minus[i] = -h;
    let (p, m) = (map.endpoint(&plus), map.endpoint(&minus));
    let d = |x: &Vec3, y: &Vec3| (x - y) / (2.0 * h);
    [d(p.u(), m.u()), d(p.v(), m.v()), d(p.a(), m.a()), d(p.b(), m.b())]
}

fn disagrees(quoted: f64, measured: f64) -> bool {
    (quoted - measured).abs() > 1e-6 * quoted.abs().max(measured.abs()) + 1e-9
}

fn classify_scaled(quoted: f64, measured: f64, r: f64) -> DeviationCategory {
    if !disagrees(quoted, r * measured) {
        DeviationCategory::RadiusScaling
    } else {
        DeviationCategory::Unexpected
    }
}

pub fn audit(map: &EndpointMap) -> Result<JacobianAudit> {
    let analytic = map.jacobian(JacobianMode::Analytic)?;
    let fd = map.jacobian(JacobianMode::FiniteDifference)?;
    let r = map.radius();
    let (axes_u, axes_v) = map.axes();

    let mut quoted_m = [[0.0; 5]; 5];
    let mut deviations = Vec::new();
    for i in 0..5 {
        let (u, v) = (axes_u[i].as_vec(), axes_v[i].as_vec());
        quoted_m[i] = quoted_row(u, v, r);
        for j in 0..5 {
            let (q, m) = (quoted_m[i][j], fd.matrix[i][j]);
            if disagrees(q, m) {
                let category = if j == 2 || j == 3 {
                    classify_scaled(q, m, r)
                } else {
                    DeviationCategory::Unexpected
                };
                deviations.push(Deviation {
                    bend: i,
                    entry: format!("J[{i}][{j}]"),
                    quoted: q,
                    measured: m,
                    category,
                });
            }
        }

        let quoted = quoted_endpoint_derivatives(u, v, r);
        let measured = measured_endpoint_derivatives(map, i, FD_STEP);
        for (name, (q, m)) in ["du", "dv", "da", "db"].iter().zip(quoted.iter().zip(measured.iter())) {
            for c in 0..3 {
                if !disagrees(q[c], m[c]) {
                    continue;
                }
                let category = match (*name, c) {
                    ("dv", 0 | 1) => classify_scaled(q[c], m[c], r),
                    ("da" | "db", 2) if !disagrees(q[c], -m[c]) => DeviationCategory::MarkerDerivativeSign,
                    _ => DeviationCategory::Unexpected,
                };
                deviations.push(Deviation {
                    bend: i,
                    entry: format!("{name}[{c}]"),
                    quoted: q[c],
                    measured: m[c],
                    category,
                });
            }
        }
    }

    let mut max_rel: f64 = 0.0;
    for i in 0..5 {
        for j in 0..5 {
            let (a, f) = (analytic.matrix[i][j], fd.matrix[i][j]);
            max_rel = max_rel.max((a - f).abs() / a.abs().max(1e-3));
        }
    }

    Ok(JacobianAudit {
        times: *map.times(),
        radius: r,
        singularity: crate::bending::singularity_measure(&analytic),
        analytic,
        finite_difference: fd,
        quoted: OmegaJacobian::new(JacobianMode::Analytic, quoted_m),
        max_relative_disagreement: max_rel,
        deviations,
    })
}

impl JacobianAudit {
    pub fn count(&self, category: DeviationCategory) -> usize {
        self.deviations.iter().filter(|d| d.category == category).count()
    }
}
