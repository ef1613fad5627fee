use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A value breaks a data invariant (non-positive attraction, bad dimensions, ...).
    #[error("invalid {field}: {message}")]
    Validation { field: String, message: String },

    /// A file could not be decoded.
    #[error("parse error in {context}: {message}")]
    Parse { context: String, message: String },

    /// A numeric argument lies outside the domain of a function.
    #[error("domain error: {0}")]
    Domain(String),

    /// A caller handed in decisions that break an operation's preconditions.
    #[error("contract violation: {0}")]
    Contract(String),

    /// A metric whose denominator is zero or otherwise meaningless.
    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    #[error("instance too large: {0}")]
    TooLarge(String),

    /// Internal consistency failure, e.g. a cycle in a graph that must be acyclic.
    #[error("internal consistency error: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn validation(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            message: message.into(),
        }
    }
}
