use hfric_quad::QuadError;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error(transparent)]
    Quadrature(#[from] QuadError),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("out of range: {0}")]
    OutOfRange(String),
    #[error("step too coarse: step-halving changes the solution by {change:e} (limit {limit:e})")]
    StepTooCoarse { change: f64, limit: f64 },
    #[error("cost guard: {0}")]
    CostGuard(String),
    #[error("blow-up at t = {t}: |P| = {p} exceeds 10x the initial momentum scale")]
    BlowUp { t: f64, p: f64 },
    #[error("fixed-point iteration does not contract: update ratio {ratio}")]
    ContractionFailure { ratio: f64 },
    #[error("trajectory has not decayed: {0}")]
    NotDecayed(String),
    #[error("fit failed: {0}")]
    Fit(String),
    #[error("claim contradicted: {0}")]
    Contradiction(String),
}

pub type Result<T> = std::result::Result<T, Error>;
