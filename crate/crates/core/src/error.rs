use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("vector is not unit length (| |v| - 1 | = {defect:e})")]
    NotUnit { defect: f64 },

    #[error("state invariant `{invariant}` violated by {violation:e} (tolerance {tol:e})")]
    InvalidState {
        invariant: &'static str,
        violation: f64,
        tol: f64,
    },

    #[error("radius must be positive and finite, got {0}")]
    InvalidRadius(f64),

    #[error("invalid control schedule: {0}")]
    InvalidSchedule(String),

    #[error("integration step must be positive and finite, got {0}")]
    InvalidStep(f64),

    #[error("time {time} outside the path domain [0, {end}]")]
    TimeOutOfRange { time: f64, end: f64 },

    #[error("invalid bend specification: {0}")]
    InvalidBend(String),

    #[error("state outside the chart neighborhood (u3 = {u3:e}, v3 = {v3:e}); both must be positive")]
    OutsideChart { u3: f64, v3: f64 },

    #[error("canonical gauge undefined: e1 is parallel to the contact point u")]
    DegenerateGauge,

    #[error("path does not pass through the base state at t = {time} (defect {defect:e})")]
    NotAtBase { time: f64, defect: f64 },

    #[error("plane normal must be nonzero and finite")]
    InvalidPlane,

    #[error("start state is off the plane (|k . phi| = {residual:e})")]
    OffPlane { residual: f64 },

    #[error("plane does not determine a horizontal direction at t = {time} (|A|, |B| <= 1e-12)")]
    DegeneratePlane { time: f64 },

    #[error("feature matrix is degenerate: {0}")]
    DegenerateFit(String),

    #[error("endpoint Jacobian is rank deficient at alpha = 0 (sigma5/sigma1 = {ratio:e})")]
    RankDeficient { ratio: f64 },

    #[error("Newton iteration did not converge in {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("malformed trajectory record: {0}")]
    Parse(String),
}

impl Error {
    /// True for failures of the numerics (degeneracy, non-convergence) as
    /// opposed to malformed input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonFinite(_)
                | Error::OutsideChart { .. }
                | Error::DegenerateGauge
                | Error::DegeneratePlane { .. }
                | Error::DegenerateFit(_)
                | Error::RankDeficient { .. }
                | Error::NotConverged { .. }
        )
    }
}
