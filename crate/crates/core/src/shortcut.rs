//! Shortcut search: bend a path so that it reaches a later state by its
//! earlier time.
//!
//! If `p(T)` is the base state and the endpoint Jacobian at `alpha = 0` has
//! full rank, the endpoint map is a local diffeomorphism onto a neighborhood
//! of the base state. Any state close enough, in particular `p(T_bar)` for
//! `T_bar` slightly past `T`, is then hit by a bent path of length `T`, which
//! shows the original path does not minimize length to `p(T_bar)`.

use nalgebra::{Vector5, SVD};
use serde::{Deserialize, Serialize};

use crate::bending::{singularity_measure, EndpointMap, JacobianMode, FD_STEP};
use crate::dynamics::HorizontalPath;
use crate::error::{Error, Result};
use crate::sampling::{random_time_tuples, seeded};
use crate::state::{chart_coords, ChartCoords};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShortcutOptions {
    /// Target chart distance.
    pub tol: f64,
    pub max_iterations: usize,
    /// Smallest admissible `sigma5 / sigma1` at `alpha = 0`.
    pub rank_tol: f64,
    pub max_halvings: usize,
}

impl Default for ShortcutOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iterations: 20,
            rank_tol: 1e-7,
            max_halvings: 8,
        }
    }
}

/// Evidence that `p(target_time)` is reached with length `horizon`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShortcutCertificate {
    pub times: [f64; 5],
    pub alpha: [f64; 5],
    pub horizon: f64,
    pub target_time: f64,
    /// Chart distance between the bent endpoint and the target.
    pub residual: f64,
    pub iterations: usize,
    /// `sigma5 / sigma1` of the endpoint Jacobian at `alpha = 0`.
    pub singularity: f64,
}

/// Number of seeded random tuples tried when no break times are given.
const AUTO_CANDIDATES: usize = 32;

/// The break times used when none are supplied: the best-conditioned among
/// evenly spaced times and a fixed-seed draw of sample-time tuples.
pub fn auto_times(p: &HorizontalPath, horizon: f64) -> Result<[f64; 5]> {
    let even: [f64; 5] = std::array::from_fn(|k| (k as f64 + 0.5) / 5.0 * horizon);
    let interior: Vec<f64> = p.times().filter(|&t| t > 0.0 && t < horizon).collect();
    let mut rng = seeded(0);
    let mut candidates = vec![even];
    candidates.extend(random_time_tuples(&mut rng, &interior, AUTO_CANDIDATES, (2.0 * p.step()).max(0.02 * horizon)));

    let mut best = None;
    for times in candidates {
        let map = EndpointMap::new(p, times, horizon)?;
        let ratio = singularity_measure(&map.analytic_jacobian());
        if best.map_or(true, |(r, _)| ratio > r) {
            best = Some((ratio, times));
        }
    }
    Ok(best.expect("at least one candidate").1)
}

fn solve(jt: &nalgebra::Matrix5<f64>, rhs: &Vector5<f64>) -> Option<Vector5<f64>> {
    SVD::new(*jt, true, true).solve(rhs, 1e-14).ok()
}

/// Damped Newton on `omega(alpha) = w(p(target_time))`.
///
/// `p(horizon)` must be the base state. Break times default to
/// [`auto_times`]. Fails with [`Error::RankDeficient`] when the Jacobian at
/// zero is too close to singular and with [`Error::NotConverged`] otherwise.
pub fn shortcut_search(
    p: &HorizontalPath,
    horizon: f64,
    target_time: f64,
    times: Option<[f64; 5]>,
    opts: &ShortcutOptions,
) -> Result<ShortcutCertificate> {
    if !(target_time >= horizon && target_time <= p.end_time()) {
        return Err(Error::TimeOutOfRange { time: target_time, end: p.end_time() });
    }
    let times = match times {
        Some(t) => t,
        None => auto_times(p, horizon)?,
    };
    let map = EndpointMap::new(p, times, horizon)?;
    let j0 = map.jacobian(JacobianMode::Analytic)?;
    let singularity = singularity_measure(&j0);
    if singularity < opts.rank_tol {
        return Err(Error::RankDeficient { ratio: singularity });
    }

    let target = chart_coords(&p.state_at(target_time)?)?;
    let residual_of = |w: &ChartCoords| Vector5::from_fn(|i, _| w.0[i] - target.0[i]);

    let mut alpha = [0.0; 5];
    let mut res = residual_of(&map.omega(&alpha)?);
    let mut iterations = 0;
    while res.norm() > opts.tol {
        if iterations == opts.max_iterations {
            return Err(Error::NotConverged { iterations, residual: res.norm() });
        }
        let j = if iterations == 0 {
            j0.clone()
        } else {
            map.fd_jacobian_at(&alpha, FD_STEP)?
        };
        // d omega = J^T d alpha
        let jt = j.to_matrix().transpose();
        let Some(delta) = solve(&jt, &(-res)) else {
            return Err(Error::NotConverged { iterations, residual: res.norm() });
        };

        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..=opts.max_halvings {
            let trial: [f64; 5] = std::array::from_fn(|i| alpha[i] + lambda * delta[i]);
            if let Ok(w) = map.omega(&trial) {
                let r = residual_of(&w);
                if r.norm() < res.norm() {
                    accepted = Some((trial, r));
                    break;
                }
            }
            lambda *= 0.5;
        }
        iterations += 1;
        match accepted {
            Some((a, r)) => {
                alpha = a;
                res = r;
            }
            None => return Err(Error::NotConverged { iterations, residual: res.norm() }),
        }
    }

    Ok(ShortcutCertificate {
        times,
        alpha,
        horizon,
        target_time,
        residual: res.norm(),
        iterations,
        singularity,
    })
}
