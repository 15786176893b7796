use thiserror::Error;

use crate::graph::NodeId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A value failed a range or shape check (empty label, out-of-range stars, ...).
    #[error("validation error: {0}")]
    Validation(String),

    /// An edge or interaction connects node kinds the schema does not allow.
    #[error("schema error: {0}")]
    Schema(String),

    #[error("node {0} not found")]
    NotFound(NodeId),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("parse error in {file} at line {line}: {message}")]
    Parse { file: String, line: u64, message: String },

    /// Cross-record consistency failure in an input dataset.
    #[error("integrity error: {0}")]
    Integrity(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(file: impl Into<String>, line: u64, message: impl Into<String>) -> Self {
        Error::Parse {
            file: file.into(),
            line,
            message: message.into(),
        }
    }
}
