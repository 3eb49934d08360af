//! Crate-wide error type.

use std::path::PathBuf;
use thiserror::Error;

/// Errors produced by this crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied argument is out of range or otherwise unusable.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// An I/O operation on `path` failed.
    #[error("{path}: {source}")]
    Io {
        /// File the operation touched.
        path: PathBuf,
        /// Underlying I/O error.
        source: std::io::Error,
    },

    /// A data file is malformed at a specific line (1-based; 0 = whole file).
    #[error("{path}:{line}: {message}")]
    Parse {
        /// File being parsed.
        path: PathBuf,
        /// 1-based line number, 0 when the problem is not line-localized.
        line: usize,
        /// What went wrong.
        message: String,
    },

    /// A model file declares a format version this build does not understand.
    #[error("unsupported model file version {found} (this build reads version {expected})")]
    ModelVersion {
        /// Version found in the file.
        found: u32,
        /// Version this build expects.
        expected: u32,
    },

    /// A model file could not be decoded at all.
    #[error("corrupt model file: {0}")]
    ModelCorrupt(String),

    /// Two shapes that must agree do not (vector lengths, parameter counts).
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// An embedding lookup failed; the key names the missing entry.
    #[error("missing embedding for key '{0}'")]
    MissingEmbedding(String),

    /// A run file references documents the corpus does not contain.
    #[error("run references unknown document id(s): {0}")]
    UnknownDocuments(String),
}

impl Error {
    /// Wraps an I/O error with the path it occurred on.
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// Builds a parse error for `path` at `line` (1-based).
    pub fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse { path: path.into(), line, message: message.into() }
    }
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
