use thiserror::Error;

/// Errors surfaced by the numerical kernels.
#[derive(Debug, Error)]
pub enum OpmError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("noise realization does not cover the requested interval: {0}")]
    InsufficientCoverage(String),

    #[error("non-finite value detected at step {step} (t = {time:.6}): {context}")]
    NonFinite {
        step: usize,
        time: f64,
        context: String,
    },

    #[error("eigensolver failed: {0}")]
    Eigensolver(String),

    #[error("Newton iteration failed: {0}")]
    NewtonFailure(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serialization(String),
}

pub type Result<T> = std::result::Result<T, OpmError>;

impl OpmError {
    pub fn invalid(msg: impl Into<String>) -> Self {
        OpmError::InvalidArgument(msg.into())
    }
}
