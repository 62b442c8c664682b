//! Classification of a horizontal path as a length-minimizer candidate.
//!
//! A minimizing path has contact features on a single 5-plane, and every
//! endpoint Jacobian built along it is singular. A path that fails either
//! test is probed with a shortcut search; a certificate proves it does not
//! minimize.

use serde::{Deserialize, Serialize};

use crate::bending::{singularity_measure, EndpointMap};
use crate::dynamics::HorizontalPath;
use crate::error::{Error, Result};
use crate::jacobian::{audit, Deviation, DeviationCategory};
use crate::plane::{fit_plane, plane_residual};
use crate::sampling::{random_time_tuples, seeded};
use crate::shortcut::{shortcut_search, ShortcutCertificate, ShortcutOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    ConsistentWithGeodesic,
    NotMinimizing,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerifyOptions {
    pub trials: usize,
    pub seed: u64,
    /// Largest plane residual accepted as "on a plane".
    pub residual_tol: f64,
    /// Largest `sigma5 / sigma1` accepted as singular.
    pub singularity_tol: f64,
    /// Neighbouring trial times are at least `gap_fraction * T` (and two
    /// steps) apart.
    pub gap_fraction: f64,
    /// The shortcut search bends the path up to `T - lead` and aims at `T`.
    pub shortcut_lead: f64,
    pub shortcut: ShortcutOptions,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            trials: 100,
            seed: 0,
            residual_tol: 1e-8,
            singularity_tol: 1e-7,
            gap_fraction: 0.02,
            shortcut_lead: 0.01,
            shortcut: ShortcutOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeodesicReport {
    pub verdict: Verdict,
    pub radius: f64,
    pub length: f64,
    pub plane_k: Option<[f64; 5]>,
    pub sigma_min: Option<f64>,
    pub sigma_max: Option<f64>,
    pub null_dim: Option<usize>,
    pub max_residual: Option<f64>,
    pub trials: usize,
    pub singularity_max: Option<f64>,
    pub singularity_min: Option<f64>,
    /// Trials with `sigma5 / sigma1 >= 1e-3`.
    pub well_conditioned_trials: usize,
    /// Quoted Jacobian entries contradicted by finite differences on the
    /// first trial tuple.
    pub deviations: Vec<Deviation>,
    pub notes: Vec<String>,
    pub certificate: Option<ShortcutCertificate>,
}

/// Threshold separating clearly regular trials from near-singular ones.
pub const WELL_CONDITIONED: f64 = 1e-3;

/// Runs the plane fit, the Jacobian trials and, when the path is not
/// consistent with a geodesic, a shortcut search.
///
/// The path is first moved by the symmetry action so that it ends at the
/// base state; the verdict does not depend on where it sits. Trials draw
/// 5-tuples of interior sample times from a generator seeded with
/// `opts.seed`; see [`trial_gap`] for their spacing.
pub fn verify_geodesic(p: &HorizontalPath, opts: &VerifyOptions) -> Result<GeodesicReport> {
    let end = p.end_time();
    let p = p.transported_to_base(end)?;
    let mut notes = Vec::new();

    let fit = match fit_plane(&p) {
        Ok(f) => Some(f),
        Err(Error::DegenerateFit(m)) => {
            notes.push(format!("plane fit skipped: {m}"));
            None
        }
        Err(e) => return Err(e),
    };
    let max_residual = fit.as_ref().map(|f| plane_residual(&p, &f.plane));
    if let Some(f) = fit.as_ref().filter(|f| f.null_dim > 1) {
        notes.push(format!(
            "contact features satisfy {} independent linear relations; the fitted normal is one of them",
            f.null_dim
        ));
    }

    let interior: Vec<f64> = p.times().filter(|&t| t > 0.0 && t < end).collect();
    let mut rng = seeded(opts.seed);
    let tuples = random_time_tuples(&mut rng, &interior, opts.trials, trial_gap(&p, opts.gap_fraction));
    if tuples.len() < opts.trials {
        notes.push(format!("only {} of {} time tuples could be drawn", tuples.len(), opts.trials));
    }
    let mut ratios = Vec::with_capacity(tuples.len());
    let mut deviations = Vec::new();
    for (i, times) in tuples.iter().enumerate() {
        let map = EndpointMap::new(&p, *times, end)?;
        ratios.push(singularity_measure(&map.analytic_jacobian()));
        if i == 0 {
            deviations = audit(&map)?.deviations;
        }
    }
    if p.radius().get() != 1.0 && deviations.iter().any(|d| d.category == DeviationCategory::RadiusScaling) {
        notes.push("second-sphere rates carry no factor r; quoted Jacobian columns 3-4 do".into());
    }
    let singularity_max = ratios.iter().copied().reduce(f64::max);
    let singularity_min = ratios.iter().copied().reduce(f64::min);
    let well_conditioned_trials = ratios.iter().filter(|&&r| r >= WELL_CONDITIONED).count();

    let consistent = max_residual.is_some_and(|r| r <= opts.residual_tol)
        && singularity_max.is_some_and(|s| s <= opts.singularity_tol);

    let mut certificate = None;
    let verdict = if consistent {
        Verdict::ConsistentWithGeodesic
    } else {
        match shortcut_for(&p, opts) {
            Ok(c) => {
                certificate = Some(c);
                Verdict::NotMinimizing
            }
            Err(e) => {
                notes.push(format!("shortcut search failed: {e}"));
                Verdict::Inconclusive
            }
        }
    };

    Ok(GeodesicReport {
        verdict,
        radius: p.radius().get(),
        length: end,
        plane_k: fit.as_ref().map(|f| *f.plane.k()),
        sigma_min: fit.as_ref().map(|f| f.sigma_min),
        sigma_max: fit.as_ref().map(|f| f.sigma_max),
        null_dim: fit.as_ref().map(|f| f.null_dim),
        max_residual,
        trials: ratios.len(),
        singularity_max,
        singularity_min,
        well_conditioned_trials,
        deviations,
        notes,
        certificate,
    })
}

/// Smallest spacing between trial times: `max(2 step, fraction * T)`.
///
/// Two nearly equal times give nearly equal Jacobian rows, so `sigma5`
/// shrinks with the smallest gap whatever the path; spacing the tuples keeps
/// the trials about the path rather than about the draw.
pub fn trial_gap(p: &HorizontalPath, fraction: f64) -> f64 {
    (2.0 * p.step()).max(fraction * p.end_time())
}

/// Bends the path up to the sample nearest `T - lead` so that it reaches
/// `p(T)`.
fn shortcut_for(p: &HorizontalPath, opts: &VerifyOptions) -> Result<ShortcutCertificate> {
    let end = p.end_time();
    let goal = end - opts.shortcut_lead;
    let horizon = p
        .times()
        .filter(|&t| t > 0.0 && t < end)
        .min_by(|a, b| (a - goal).abs().total_cmp(&(b - goal).abs()))
        .ok_or(Error::TimeOutOfRange { time: goal, end })?;
    let q = p.transported_to_base(horizon)?;
    shortcut_search(&q, horizon, end, None, &opts.shortcut)
}
