use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid image: {0}")]
    InvalidImage(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("out of bounds: {0}")]
    OutOfBounds(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("cascade model: {0}")]
    Model(String),
    #[error("session is not calibrated")]
    Uncalibrated,
    #[error("malformed input: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
