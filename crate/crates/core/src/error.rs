use thiserror::Error;

use crate::elasticity::SolverError;

/// Errors produced by the coupling engine, the accelerators and the backends.
#[derive(Debug, Error)]
pub enum SchwarzError {
    #[error("interface layout mismatch: expected {expected} values, got {got}")]
    LayoutMismatch { expected: usize, got: usize },

    #[error("non-finite interface value at index {index}")]
    NonFinite { index: usize },

    #[error("invalid configuration: {}", .0.join("; "))]
    InvalidConfig(Vec<String>),

    #[error("subdomain {subdomain} solve failed: {source}")]
    Subdomain {
        subdomain: usize,
        #[source]
        source: SolverError,
    },

    #[error("accelerator failure: {0}")]
    Accelerator(String),

    #[error("{0}")]
    Backend(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("config parse error: {0}")]
    Parse(String),
}

impl SchwarzError {
    pub fn invalid(msg: impl Into<String>) -> Self {
        SchwarzError::InvalidConfig(vec![msg.into()])
    }
}

pub type Result<T> = std::result::Result<T, SchwarzError>;
