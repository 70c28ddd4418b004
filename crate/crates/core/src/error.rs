use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("shape error: {0}")]
    Shape(String),

    #[error("matrix logarithm undefined: {0}")]
    LogDomain(String),

    #[error("element not in algebra (residual {residual:.3e})")]
    NotInAlgebra { residual: f64 },

    #[error("vector is not tangent to the group (residual {residual:.3e})")]
    NotTangent { residual: f64 },

    #[error("step {step} too large: norm {norm:.3e} exceeds {limit}")]
    StepSize { step: usize, norm: f64, limit: f64 },

    #[error("lift failed at step {step}: {reason}")]
    LiftStep { step: usize, reason: String },

    #[error("frame does not project onto path at step {step} (residual {residual:.3e})")]
    InconsistentLift { step: usize, residual: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("unreliable report: {aborted} of {total} paths aborted")]
    UnreliableReport { aborted: usize, total: usize },

    #[error("invalid space specification: {0}")]
    InvalidSpec(String),

    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;
