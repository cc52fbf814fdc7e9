use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum MalisError {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// File does not start with the expected magic bytes.
    #[error("bad magic: expected {expected:?}, found {found:?}")]
    Magic { expected: String, found: String },

    /// Header fields are inconsistent or unsupported.
    #[error("bad header: {0}")]
    Header(String),

    /// Payload shorter or longer than the header declares.
    #[error("payload length mismatch: header declares {declared} values, file holds {found}")]
    Length { declared: usize, found: usize },

    /// A stored value falls outside its permitted range.
    #[error("value {value} out of range at index {index}")]
    Range { index: usize, value: f64 },

    #[error("invalid argument: {0}")]
    Argument(String),

    /// Queried pair lies in different components of the graph.
    #[error("no path between nodes {a} and {b}")]
    NoPath { a: usize, b: usize },

    /// A metric was asked to evaluate zero pixel pairs.
    #[error("no pixel pairs to evaluate")]
    EmptyEvaluation,

    #[error("invalid configuration: {0}")]
    Config(String),
}

impl MalisError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        MalisError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, MalisError>;
