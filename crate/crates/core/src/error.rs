use thiserror::Error;

use crate::fdsolver::GridFunction;

pub type Result<T> = std::result::Result<T, Error>;

/// State carried out of a Newton solve that failed to converge.
#[derive(Debug, Clone)]
pub struct Divergence {
    pub last_iterate: GridFunction,
    pub residual_history: Vec<f64>,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("overflow: {0}")]
    Overflow(String),
    #[error("underflow: {0}")]
    Underflow(String),
    #[error("singularity: {0}")]
    Singularity(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("newton iteration diverged after {} iterations (last residual {:e})",
        .0.residual_history.len(),
        .0.residual_history.last().copied().unwrap_or(f64::NAN))]
    Divergence(Box<Divergence>),
    #[error("numeric error: {0}")]
    Numeric(String),
    #[error("fit error: {0}")]
    Fit(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short machine-readable tag, used in CLI error JSON and FFI status codes.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Overflow(_) => "overflow",
            Error::Underflow(_) => "underflow",
            Error::Singularity(_) => "singularity",
            Error::Config(_) => "config",
            Error::Divergence(_) => "divergence",
            Error::Numeric(_) => "numeric",
            Error::Fit(_) => "fit",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

pub(crate) fn config<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Config(msg.into()))
}
