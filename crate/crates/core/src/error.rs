use thiserror::Error;

/// Errors raised by model construction, linear algebra and the solvers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    /// The encoding Gram matrix `P P^T` is (numerically) singular.
    #[error("encoding matrix is rank deficient (gram condition {condition:.3e}); dependent rows {rows:?}")]
    RankDeficient { condition: f64, rows: Vec<usize> },

    #[error("cannot build an encoding with {requested} rows from {available} independent transition vectors")]
    InfeasibleEncoding { requested: usize, available: usize },

    #[error("solver diverged at iteration {iter}: {reason}")]
    Diverged { iter: usize, reason: String },

    #[error("serialization: {0}")]
    Serde(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serde(e.to_string())
    }
}
