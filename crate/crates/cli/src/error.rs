use rgm_core::RgmError;
use thiserror::Error;

/// CLI failure categories mapped to exit codes: validation errors exit 2,
/// I/O errors exit 3, numerical failures exit 4.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Io(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }
}

impl From<RgmError> for CliError {
    fn from(e: RgmError) -> Self {
        match e {
            RgmError::Io(_) => CliError::Io(e.to_string()),
            RgmError::NonFinite(_) | RgmError::Singular(_) => CliError::Numerical(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
