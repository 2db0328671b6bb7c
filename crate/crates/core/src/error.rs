//! Error type shared by every module.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PcrError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("numeric failure: {0}")]
    NumericFailure(String),
    #[error("invalid spectral specification: {0}")]
    InvalidSpec(String),
    #[error("unsupported specification: {0}")]
    UnsupportedSpec(String),
    #[error("n = {n} is below the validity threshold {threshold}")]
    BelowThreshold { n: f64, threshold: f64 },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("run failure: {0}")]
    RunFailure(String),
    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, PcrError>;

impl From<std::io::Error> for PcrError {
    fn from(e: std::io::Error) -> Self {
        PcrError::Io(e.to_string())
    }
}

impl From<csv::Error> for PcrError {
    fn from(e: csv::Error) -> Self {
        PcrError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for PcrError {
    fn from(e: serde_json::Error) -> Self {
        PcrError::Config(e.to_string())
    }
}
