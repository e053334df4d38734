use thiserror::Error;

use crate::tracker::StepRecord;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("degree structure mismatch between systems")]
    DegreeMismatch,

    #[error("invalid system: {0}")]
    InvalidSystem(String),

    #[error("zero vector where a projective point was required")]
    ZeroVector,

    /// The restricted Jacobian is numerically singular; the condition number is infinite.
    #[error("restricted Jacobian is rank deficient (sigma_min / sigma_max = {ratio:e})")]
    RankDeficient { ratio: f64 },

    #[error("derivative order {k} outside [{min}, {max}]")]
    OrderOutOfRange { k: usize, min: usize, max: usize },

    #[error("matrix is not unitary (max deviation {deviation:e})")]
    NotUnitary { deviation: f64 },

    #[error("comparison gauges out of range: u = {u}, v = {v} (need both <= 1/20)")]
    GaugeOutOfRange { u: f64, v: f64 },

    #[error("parameter `{name}` = {value} is out of range: {reason}")]
    ParameterOutOfRange {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("t = {t} lies outside the homotopy domain [{a}, {b}]")]
    TimeOutOfDomain { t: f64, a: f64, b: f64 },

    #[error("homotopy passes through the zero system at t = {t}")]
    ZeroSystem { t: f64 },

    #[error("adaptive quadrature did not converge on [{t0}, {t1}]")]
    QuadratureFailure { t0: f64, t1: f64 },

    #[error("Newton refinement failed: residual {residual:e}")]
    RefinementFailed { residual: f64 },

    #[error("start point not certified: alpha bound {alpha_bound:e} >= threshold {threshold:e}")]
    StartNotCertified { alpha_bound: f64, threshold: f64 },

    #[error("step invariant violated at t = {}: {reason}", record.t)]
    StepInvariantViolated {
        record: Box<StepRecord>,
        reason: String,
    },

    #[error("exceeded the step budget: {steps} steps > limit {limit}")]
    MaxStepsExceeded { steps: usize, limit: f64 },

    #[error("oracle failure: {0}")]
    Oracle(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
