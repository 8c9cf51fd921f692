use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Malformed or inconsistent input data.
    #[error("{path}:{line}: {msg}")]
    Parse { path: PathBuf, line: usize, msg: String },

    #[error("data error: {0}")]
    Data(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("node {0} is not adjacent to node {1}")]
    NotAdjacent(usize, usize),

    #[error("no valid negatives for center {0}")]
    NoValidNegatives(usize),

    #[error("node {0} has a zero-norm embedding before normalization")]
    ZeroEmbedding(String),

    #[error("classification head is absent")]
    MissingHead,

    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("non-finite loss at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },

    #[error("checkpoint header mismatch: {0}")]
    Checkpoint(String),

    #[error("{0}")]
    Invalid(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            msg: msg.into(),
        }
    }

    /// Process exit code for the command-line front end: 1 usage, 2 data, 3 numeric.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Invalid(_) => 1,
            Error::Io { .. }
            | Error::Parse { .. }
            | Error::Data(_)
            | Error::Checkpoint(_)
            | Error::NotAdjacent(..)
            | Error::LabelOutOfRange { .. }
            | Error::MissingHead
            | Error::Dimension(_)
            | Error::NoValidNegatives(_) => 2,
            Error::ZeroEmbedding(_) | Error::NonFinite(_) | Error::NonFiniteLoss { .. } => 3,
        }
    }
}
