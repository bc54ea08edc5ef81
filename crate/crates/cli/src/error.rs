use std::process::ExitCode;

use maxcusum::Error as CoreError;
use maxcusum_sim::SimError;

/// Failure classes with stable exit codes.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Invalid flags, plan or parameter combination (exit 2).
    #[error("configuration error: {0}")]
    Config(String),
    /// Unreadable or malformed input data (exit 3).
    #[error("data error: {0}")]
    Data(String),
    /// Numerical failure such as a non-positive-definite matrix (exit 4).
    #[error("numeric error: {0}")]
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Numeric(_) => 4,
        })
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::InvalidConfig(_) | CoreError::OutOfRange { .. } => {
                CliError::Config(e.to_string())
            }
            CoreError::InvalidSample(_) | CoreError::LengthMismatch { .. } => {
                CliError::Data(e.to_string())
            }
            CoreError::Numeric(_) => CliError::Numeric(e.to_string()),
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Core(inner) => inner.into(),
            SimError::Plan(_) | SimError::ThreadPool(_) => CliError::Config(e.to_string()),
            SimError::Io(_) | SimError::Csv(_) | SimError::Json(_) => CliError::Data(e.to_string()),
        }
    }
}
