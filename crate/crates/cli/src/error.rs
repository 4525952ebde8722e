use nmfeb_core::Error as CoreError;

/// Failure of a command, carrying its process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Unreadable or malformed input or config.
    #[error("{0}")]
    Input(String),
    /// Inputs parse but are inconsistent or out of range.
    #[error("{0}")]
    Validation(String),
    /// Output directory cannot be written.
    #[error("{0}")]
    Unwritable(String),
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Internal(_) => 1,
            CliError::Input(_) => 2,
            CliError::Validation(_) => 3,
            CliError::Unwritable(_) => 4,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::InvalidPrior(_)
            | CoreError::DegeneratePrior
            | CoreError::ZeroColumn(_)
            | CoreError::DimensionMismatch { .. }
            | CoreError::RankDeficient { .. }
            | CoreError::InvalidArgument(_) => CliError::Validation(e.to_string()),
            _ => CliError::Internal(e.to_string()),
        }
    }
}
