//! Error type shared across the crate.

use std::path::PathBuf;

use thiserror::Error;

/// Errors produced while loading inputs or running the analysis.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed commit record at line {line}: {reason}")]
    MalformedCommit { line: usize, reason: String },

    #[error("duplicate commit id {commit_id} in repo {repo_id}")]
    DuplicateCommit { repo_id: String, commit_id: String },

    #[error("unparseable smell report at offset {offset}: {reason}")]
    MalformedReport { offset: usize, reason: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("cannot partition {0} files into quality groups (need at least 4)")]
    TooFewFiles(usize),

    #[error("no eligible files for year {0}")]
    EmptyEligible(i32),

    #[error("invalid corpus spec: {0}")]
    InvalidSpec(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
