use gevlab_core::Error as CoreError;
use thiserror::Error;

/// Failure classes, each with its own process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("assumption check failed")]
    VerifyFailed,
    #[error("blow-up at t = {0}")]
    BlowUp(f64),
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Internal(_) => 1,
            CliError::Usage(_) => 2,
            CliError::VerifyFailed => 3,
            CliError::BlowUp(_) => 4,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::InvalidGeometry(_)
            | CoreError::InadmissibleMode { .. }
            | CoreError::UnsupportedGeometry { .. }
            | CoreError::OutsideDomain(_)
            | CoreError::GeometryMismatch(..)
            | CoreError::InvalidParameter(_)
            | CoreError::WeightOverflow { .. }
            | CoreError::Parse(_) => CliError::Usage(e.to_string()),
            _ => CliError::Internal(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Internal(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Internal(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
