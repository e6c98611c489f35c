use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised while validating or evaluating problem data.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
}

/// Errors raised by the conic layer.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConicError {
    /// The backend reported a numerical failure and the rescaled retry
    /// failed as well.
    #[error("conic solver failed ({status}) after rescaled retry")]
    SolverFailure { status: String },
    #[error("malformed conic problem: {0}")]
    Malformed(String),
    #[error("argument cut angles out of range: [{lo}, {hi}]")]
    AngleRange { lo: f64, hi: f64 },
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Conic(#[from] ConicError),
    #[error("invalid solver configuration: {0}")]
    Config(String),
    #[error("oracle grid too large: {points} points exceeds limit {limit}")]
    GridTooLarge { points: u128, limit: u128 },
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}
