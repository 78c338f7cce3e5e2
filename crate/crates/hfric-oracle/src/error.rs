use thiserror::Error;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("under-resolved grid: {0}")]
    UnderResolved(String),
    #[error("phase aliasing: {0}")]
    Aliasing(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Core(#[from] hfric_core::error::Error),
}

pub type Result<T> = std::result::Result<T, OracleError>;
