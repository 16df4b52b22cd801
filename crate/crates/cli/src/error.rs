use gee_core::Error as CoreError;

/// Failure of a command, carrying its exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("{0}")]
    Compute(String),
    #[error("i/o: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) => 2,
            Self::Compute(_) | Self::Io(_) => 3,
        }
    }

    pub fn compute(e: impl std::fmt::Display) -> Self {
        Self::Compute(e.to_string())
    }

    pub fn io(e: impl std::fmt::Display) -> Self {
        Self::Io(e.to_string())
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::InvalidAlphabet(_)
            | CoreError::InvalidPmf(_)
            | CoreError::InvalidSubset { .. }
            | CoreError::Dimension { .. }
            | CoreError::InvalidEps(_)
            | CoreError::InvalidThreshold(_)
            | CoreError::InvalidKappa(_)
            | CoreError::InvalidInput(_)
            | CoreError::Domain(_) => Self::Usage(e.to_string()),
            _ => Self::Compute(e.to_string()),
        }
    }
}
