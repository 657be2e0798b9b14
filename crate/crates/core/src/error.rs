use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum FracError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("convergence error in {what}: estimate {estimate:.3e} exceeds budget {budget:.3e}")]
    Convergence {
        what: String,
        estimate: f64,
        budget: f64,
    },
    #[error("zero function: {0}")]
    ZeroFunction(String),
    #[error("sampling error: {0}")]
    Sampling(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("nonpositive remainder {remainder:.6e} (tolerance {tolerance:.3e})")]
    NonPositiveRemainder { remainder: f64, tolerance: f64 },
    #[error("search failed: {0}")]
    Search(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, FracError>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(FracError::Domain(msg.into()))
}
