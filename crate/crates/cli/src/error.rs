use homogmart::config::ConfigError;

/// Process exit codes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExitStatus {
    Pass = 0,
    Fail = 1,
    Usage = 2,
    Io = 3,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{file}: {error}")]
    Config { file: String, error: ConfigError },
    #[error("{0}")]
    Io(String),
    #[error(transparent)]
    Core(#[from] homogmart::Error),
}

impl CliError {
    pub fn status(&self) -> ExitStatus {
        use homogmart::Error as E;
        match self {
            CliError::Usage(_) | CliError::Config { .. } => ExitStatus::Usage,
            CliError::Io(_) => ExitStatus::Io,
            CliError::Core(E::InvalidInput(_) | E::InvalidSpec(_) | E::InvalidDimension(_) | E::Unsupported(_) | E::Shape(_)) => {
                ExitStatus::Usage
            }
            CliError::Core(_) => ExitStatus::Fail,
        }
    }
}

impl From<homogmart::io::IoError> for CliError {
    fn from(e: homogmart::io::IoError) -> Self {
        match e {
            homogmart::io::IoError::Io(io) => CliError::Io(io.to_string()),
            homogmart::io::IoError::Format(msg) => CliError::Usage(format!("malformed path file: {msg}")),
        }
    }
}
