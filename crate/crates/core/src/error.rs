use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid cross-section domain: {0}")]
    InvalidDomain(String),

    #[error("unsupported cross-section shape: {0}")]
    UnsupportedShape(String),

    #[error("x = {x} outside tabulated range [{lo}, {hi}]")]
    OutOfRange { x: f64, lo: f64, hi: f64 },

    #[error("capacity exceeded: requested {requested}, available {available}")]
    Capacity { requested: usize, available: usize },

    #[error("near-singular pivot {pivot:e} at row {row}; retry with a shifted σ")]
    NearSingular { row: usize, pivot: f64 },

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    Convergence { iterations: usize, residual: f64 },

    #[error("mode basis is not orthonormal (Gram deviation {deviation:e})")]
    Basis { deviation: f64 },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
