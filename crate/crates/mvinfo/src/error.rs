use thiserror::Error;

/// Errors across the whole laboratory.
#[derive(Error, Debug)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    Validation(String),

    #[error("invalid encoding: {0}")]
    Encoding(String),

    #[error("alphabet too large: {0}")]
    Capacity(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("solver error: {0}")]
    Solver(String),

    #[error("file format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
