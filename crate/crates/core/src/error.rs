use thiserror::Error;

/// Errors surfaced by the numerical and simulation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("precision error: {0}")]
    Precision(String),
    #[error("convergence error: {0}")]
    Convergence(String),
    #[error("step size error: {0}")]
    StepSize(String),
    #[error("horizon error: {0}")]
    Horizon(String),
    #[error("resource error: {0}")]
    Resource(String),
    #[error("insufficient rare events: {hits} hits, need at least {needed}")]
    InsufficientRareEvents { hits: usize, needed: usize },
    #[error("overflow guard: {0}")]
    OverflowGuard(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
