use thiserror::Error;

/// Errors produced by the simulation and analysis routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("spectral field violates Hermitian symmetry (max defect {defect:e})")]
    NotHermitian { defect: f64 },

    /// A non-finite value appeared while time stepping.
    #[error("blow-up at t = {time} (grid index {index})")]
    BlowUp { time: f64, index: usize },

    #[error("sigma left its admissible range at q = {q}: sigma = {sigma}")]
    SigmaOutOfRange { q: f64, sigma: f64 },

    #[error("non-finite integrand at quadrature node {node} (argument {argument})")]
    NonFiniteIntegrand { node: usize, argument: f64 },

    #[error("reaction not admissible: {0}")]
    Class(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("malformed raster: {0}")]
    Raster(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
