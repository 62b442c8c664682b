//! Experiment description read from a TOML file.

use std::path::Path;

use serde::{Deserialize, Serialize};

use rollgeo_core::plane::{plane_rate, plane_residual, trace_plane_curve, PlaneSpec};
use rollgeo_core::sampling::{random_plane_normal, random_schedule_with_turns, random_state, seeded, SeededRng};
use rollgeo_core::{roll_with, ControlSchedule, FieldConvention, HorizontalPath, RadiusRatio, RawState};

use crate::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub radius: RadiusRatio,
    #[serde(default = "default_step")]
    pub step: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub convention: FieldConvention,
    pub path: PathConfig,
    pub bend: Option<BendConfig>,
    pub jacobian: Option<JacobianConfig>,
    pub verify: Option<VerifyConfig>,
    pub shortcut: Option<ShortcutConfig>,
}

fn default_step() -> f64 {
    1e-3
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathConfig {
    /// `"base"` (default), `"random"` or the 12 numbers `u, v, a, b`.
    pub start: Option<StartConfig>,
    /// Explicit `[duration, heading]` pieces.
    pub controls: Option<Vec<[f64; 2]>>,
    pub random_controls: Option<RandomControls>,
    pub plane: Option<PlaneConfig>,
    /// Move the path by the symmetry action so that its state at this time
    /// is the base state. `"end"` means the final time.
    pub base_at: Option<BaseAt>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum StartConfig {
    Named(StartName),
    Explicit([f64; 12]),
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StartName {
    Base,
    Random,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomControls {
    pub segments: usize,
    pub total: f64,
    #[serde(default = "default_min_turn")]
    pub min_turn: f64,
    #[serde(default = "default_max_turn")]
    pub max_turn: f64,
}

fn default_min_turn() -> f64 {
    0.5
}

fn default_max_turn() -> f64 {
    std::f64::consts::PI - 0.5
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlaneConfig {
    pub k: PlaneNormal,
    pub duration: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum PlaneNormal {
    Given([f64; 5]),
    Named(RandomName),
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RandomName {
    Random,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(untagged)]
pub enum BaseAt {
    Time(f64),
    Named(EndName),
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EndName {
    End,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BendConfig {
    pub times: [f64; 5],
    pub angles: [f64; 5],
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JacobianConfig {
    /// Break times; evenly spaced over `(0, horizon)` when absent.
    pub times: Option<[f64; 5]>,
    /// Defaults to the final time.
    pub horizon: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    pub trials: Option<usize>,
    pub residual_tol: Option<f64>,
    pub singularity_tol: Option<f64>,
    pub gap_fraction: Option<f64>,
    pub shortcut_lead: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShortcutConfig {
    pub horizon: f64,
    pub target: f64,
    pub times: Option<[f64; 5]>,
    pub tol: Option<f64>,
    pub max_iterations: Option<usize>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Input(format!("invalid config {}: {e}", path.display())))
    }

    /// The experiment's path. Random draws come from one generator seeded
    /// with `seed`, in the order start, controls, plane normal.
    pub fn build_path(&self, seed: u64) -> Result<Built, CliError> {
        let mut rng = seeded(seed);
        let start = self.start_state(&mut rng)?;
        let p = &self.path;
        let sources = [p.controls.is_some(), p.random_controls.is_some(), p.plane.is_some()];
        if sources.iter().filter(|&&x| x).count() != 1 {
            return Err(CliError::Input(
                "[path] needs exactly one of `controls`, `random_controls`, `plane`".into(),
            ));
        }
        let mut plane_check = None;
        let path = if let Some(pieces) = &p.controls {
            let c = ControlSchedule::new(pieces.iter().map(|&[d, th]| (d, th)))?;
            roll_with(&start, self.radius, &c, self.step, self.convention)?
        } else if let Some(rc) = &p.random_controls {
            if rc.segments == 0 || !(rc.total > 0.0) || !(rc.min_turn < rc.max_turn) {
                return Err(CliError::Input("random_controls needs segments > 0, total > 0, min_turn < max_turn".into()));
            }
            let c = random_schedule_with_turns(&mut rng, rc.segments, rc.total, rc.min_turn, rc.max_turn);
            roll_with(&start, self.radius, &c, self.step, self.convention)?
        } else {
            let plane = self.plane(&mut rng, &start)?;
            if self.convention != FieldConvention::ArcLength {
                return Err(CliError::Input("plane tracing uses the arc-length fields".into()));
            }
            let duration = p.plane.as_ref().expect("checked above").duration;
            let traced = trace_plane_curve(&start, self.radius, &plane, duration, self.step)?;
            plane_check = Some(PlaneCheck {
                k: *plane.k(),
                max_residual: plane_residual(&traced, &plane),
                max_rate: plane_rate(&traced, &plane),
            });
            traced
        };
        let path = match p.base_at {
            None => path,
            Some(BaseAt::Named(EndName::End)) => path.transported_to_base(path.end_time())?,
            Some(BaseAt::Time(t)) => path.transported_to_base(t)?,
        };
        Ok(Built { path, plane: plane_check })
    }

    fn start_state(&self, rng: &mut SeededRng) -> Result<RawState, CliError> {
        Ok(match &self.path.start {
            None | Some(StartConfig::Named(StartName::Base)) => RawState::base(),
            Some(StartConfig::Named(StartName::Random)) => random_state(rng),
            Some(StartConfig::Explicit(c)) => RawState::from_array(c, 1e-9)?,
        })
    }

    /// The plane, anchored at the start state so the curve starts on it.
    fn plane(&self, rng: &mut SeededRng, start: &RawState) -> Result<PlaneSpec, CliError> {
        let cfg = self.path.plane.as_ref().expect("plane source");
        let k = match cfg.k {
            PlaneNormal::Given(k) => k,
            PlaneNormal::Named(RandomName::Random) => random_plane_normal(rng),
        };
        Ok(PlaneSpec::new(k, *start)?)
    }
}

pub struct Built {
    pub path: HorizontalPath,
    /// Present for plane-traced paths; measured before any transport.
    pub plane: Option<PlaneCheck>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PlaneCheck {
    pub k: [f64; 5],
    pub max_residual: f64,
    pub max_rate: f64,
}
