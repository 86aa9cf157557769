//! Crate-wide error type.
//!
//! Variants are grouped by how callers are expected to react; the CLI maps
//! them onto its exit-code contract (config 2, I/O and format 3, domain
//! input 4).

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// An operation was given a parameter outside its documented domain
    /// (even kernel size, non-positive sigma, fraction outside (0,1), ...).
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// The data handed to an operation cannot be processed (empty training
    /// set, label out of range, shape mismatch, ...).
    #[error("invalid input: {0}")]
    Input(String),

    /// A configuration file or value is unusable.
    #[error("config error: {0}")]
    Config(String),

    /// A file exists but its contents violate the expected format.
    #[error("{path}: format error: {message}")]
    Format { path: PathBuf, message: String },

    /// Textual input (XML, headers) failed to parse.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// An annotation names a class that is not in the label map.
    #[error("unknown class name {0:?}")]
    UnknownLabel(String),

    /// An underlying I/O failure, annotated with the path involved.
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Format { path: path.into(), message: message.into() }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
