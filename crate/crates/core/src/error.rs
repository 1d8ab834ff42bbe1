use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error("{location}: value {value} out of range for domain size {size}")]
    OutOfRange {
        location: String,
        value: usize,
        size: usize,
    },

    #[error("{location}: arity mismatch (expected {expected}, found {found})")]
    ArityMismatch {
        location: String,
        expected: usize,
        found: usize,
    },

    #[error("resource cap exceeded: {what} needs {needed}, cap is {cap}")]
    CapExceeded {
        what: String,
        needed: String,
        cap: usize,
    },

    #[error("{0} is not a subuniverse")]
    NotSubuniverse(String),

    #[error("empty subset")]
    EmptySubset,

    #[error("domain too large: {0}")]
    DomainTooLarge(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("precondition violated: {0}")]
    Precondition(String),
}

impl Error {
    /// Whether this error reports an exhausted resource (cap or enumeration
    /// bound) rather than bad input.
    pub fn is_resource(&self) -> bool {
        matches!(self, Error::CapExceeded { .. } | Error::DomainTooLarge(_))
    }

    pub(crate) fn parse(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            location: location.into(),
            message: message.into(),
        }
    }

    pub(crate) fn invalid(message: impl Into<String>) -> Self {
        Error::InvalidArgument(message.into())
    }

    pub(crate) fn cap(what: impl Into<String>, needed: impl ToString, cap: usize) -> Self {
        Error::CapExceeded {
            what: what.into(),
            needed: needed.to_string(),
            cap,
        }
    }
}
