use ranwire_core::Error;

/// Exit codes: 1 usage, 2 data, 3 numerical failure or failed check.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Check(String),
    #[error(transparent)]
    Core(#[from] Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Check(_) => 3,
            CliError::Core(e) => match e {
                Error::InvalidParameter(_) | Error::Capacity(_) => 1,
                Error::Numerical(_) => 3,
                _ => 2,
            },
        }
    }

    /// Re-labels a core error raised while loading inputs as a data error.
    pub fn data(e: Error) -> Self {
        match e {
            Error::Numerical(_) => CliError::Core(e),
            other => CliError::Data(other.to_string()),
        }
    }
}
