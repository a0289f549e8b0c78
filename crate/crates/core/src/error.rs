use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("history too shallow: need lag {needed}, buffer holds {available}")]
    InsufficientHistory { needed: usize, available: usize },

    #[error("singular system: {0}")]
    Singular(String),

    #[error("Riccati iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("time {time} lies beyond the announcement horizon (limit {limit})")]
    BeyondHorizon { time: i64, limit: i64 },

    #[error("problem too large for dense solve: {0}")]
    TooLarge(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
