use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A configuration or argument violated a documented invariant.
    #[error("invalid {key}: {reason}")]
    Validation { key: String, reason: String },

    /// An event log record could not be parsed.
    #[error("event log record {record}: {reason}")]
    Parse { record: usize, reason: String },
}

impl Error {
    pub(crate) fn validation(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Validation {
            key: key.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn parse(record: usize, reason: impl Into<String>) -> Self {
        Error::Parse {
            record,
            reason: reason.into(),
        }
    }
}
