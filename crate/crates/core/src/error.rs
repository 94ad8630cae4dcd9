use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied value is outside its documented domain.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// An in-memory structure violates its shape invariants.
    #[error("malformed structure: {0}")]
    Structural(String),

    /// A text input could not be parsed.
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    /// A file parsed but disagrees with its own header or another input.
    #[error("schema error in query {query}: {message}")]
    Schema { query: String, message: String },

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: msg.into(),
        }
    }

    pub(crate) fn schema(query: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Schema {
            query: query.into(),
            message: msg.into(),
        }
    }
}
