use thiserror::Error;

/// Errors produced by the distance library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not symmetric positive definite ({0})")]
    NotPositiveDefinite(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("unknown cluster label {0}")]
    UnknownLabel(usize),

    #[error("zero variance in column {0}")]
    ZeroVariance(usize),

    #[error("all {restarts} EM restarts degenerated")]
    DegenerateFit { restarts: usize },

    #[error("transport solver did not converge after {0} pivots")]
    SolverStalled(usize),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
