use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied argument violates an operation's precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The exact oracle was asked to work beyond its size budget.
    #[error("{what} supports at most {limit} vertices, got {got}; {hint}")]
    Capacity {
        what: &'static str,
        limit: usize,
        got: usize,
        hint: &'static str,
    },

    /// A randomized construction could not produce a valid object.
    #[error("construction failed: {0}")]
    Construction(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
