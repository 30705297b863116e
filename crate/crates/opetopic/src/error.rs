use thiserror::Error;

/// Failures shared by every module. Law violations are reported as data, not errors.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("structural error: {0}")]
    Structural(String),
    #[error("composability error: {0}")]
    Composability(String),
    #[error("truncation: {0}")]
    Truncation(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
