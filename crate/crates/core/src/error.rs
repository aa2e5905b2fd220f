use thiserror::Error;

/// Failure modes shared by every module.
///
/// `Domain` covers inputs that violate an operation's preconditions;
/// `Capacity` covers inputs that are valid but exceed a hard work limit.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("capacity error: {0}")]
    Capacity(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

pub(crate) fn capacity<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Capacity(msg.into()))
}
