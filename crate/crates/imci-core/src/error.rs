//! Error type shared by all estimators and the simulation harness.

use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum Error {
    /// An input violated a precondition (out-of-range parameter, bad level, ...).
    #[error("domain error: {0}")]
    Domain(String),
    /// An iterative routine failed to converge to its stated tolerance.
    #[error("numerical failure: {0}")]
    Numerical(String),
    /// A simulation grid contains invalid cells; the message lists the offenders.
    #[error("invalid grid: {0}")]
    Grid(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn numerical(msg: impl Into<String>) -> Error {
    Error::Numerical(msg.into())
}
