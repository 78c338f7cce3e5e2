use hfric_core::error::Error as CoreError;
use hfric_oracle::OracleError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("bad config: `{field}` {constraint}")]
    Config { field: String, constraint: String },
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, CliError>;

/// Exit status: 0 success, 1 i/o, 2 validation failure, 3 a checked claim failed.
pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_CLAIM: i32 = 3;

fn core_code(e: &CoreError) -> i32 {
    match e {
        CoreError::BlowUp { .. }
        | CoreError::ContractionFailure { .. }
        | CoreError::NotDecayed(_)
        | CoreError::Contradiction(_) => EXIT_CLAIM,
        _ => EXIT_VALIDATION,
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => EXIT_VALIDATION,
            CliError::Core(e) | CliError::Oracle(OracleError::Core(e)) => core_code(e),
            CliError::Oracle(_) => EXIT_VALIDATION,
            CliError::Io(_) | CliError::Json(_) => EXIT_IO,
        }
    }
}

impl From<hfric_quad::QuadError> for CliError {
    fn from(e: hfric_quad::QuadError) -> Self {
        CliError::Core(e.into())
    }
}
