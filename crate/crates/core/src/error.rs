use thiserror::Error;

/// Errors raised by the toolkit.
///
/// The variants map onto the CLI exit codes: argument, domain and
/// precondition failures exit with 2, resource failures with 3.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum VexpError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("resource limit exceeded: {0}")]
    Resource(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl VexpError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        VexpError::InvalidArgument(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        VexpError::Domain(msg.into())
    }
}

impl From<std::io::Error> for VexpError {
    fn from(e: std::io::Error) -> Self {
        VexpError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, VexpError>;
