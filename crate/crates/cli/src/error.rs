use std::fmt;

/// Failure of a command, split by exit code: 2 for usage or configuration
/// problems, 3 for unreadable, inconsistent or unwritable data.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Data(m) => f.write_str(m),
        }
    }
}

impl std::error::Error for CliError {}

impl From<autoseg_core::Error> for CliError {
    fn from(e: autoseg_core::Error) -> Self {
        if e.is_data_error() {
            CliError::Data(e.to_string())
        } else {
            CliError::Usage(e.to_string())
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
