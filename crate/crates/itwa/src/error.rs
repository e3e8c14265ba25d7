use thiserror::Error;

/// Errors produced by the simulation library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("size mismatch: expected {expected} spins, found {found}")]
    SizeMismatch { expected: usize, found: usize },

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("{what} is limited to N <= {limit} spins (got N = {n}); {hint}")]
    TooLarge {
        what: &'static str,
        n: usize,
        limit: usize,
        hint: &'static str,
    },

    #[error("configuration model did not produce a simple graph after {0} restarts")]
    NoConvergence(usize),

    #[error("estimator: {0}")]
    Estimator(&'static str),

    #[error("all {0} trajectories became non-finite")]
    AllTrajectoriesInvalid(usize),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
