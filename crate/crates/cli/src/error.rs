use std::fmt;

/// Command failure, mapped onto the process exit code.
#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    Validation(String),
    Io(String),
    /// The run completed but no hit crossed the threshold.
    NotDetected,
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Io(_) => 3,
            CliError::NotDetected => 4,
        }
    }

    pub fn io(context: impl fmt::Display, err: std::io::Error) -> Self {
        CliError::Io(format!("{context}: {err}"))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "validation error: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
            CliError::NotDetected => write!(f, "target not detected"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<ranger_core::Error> for CliError {
    fn from(e: ranger_core::Error) -> Self {
        CliError::Validation(e.to_string())
    }
}
