use std::io;
use std::path::{Path, PathBuf};

use crate::jsonl::{FileError, SchemaError};

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}: schema error at {source}")]
    Schema {
        path: PathBuf,
        #[source]
        source: SchemaError,
    },
    #[error("duplicate id `{id}`{}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    DuplicateId { id: String, line: Option<usize> },
    #[error("invalid record `{id}`: {reason}")]
    InvalidRecord { id: String, reason: String },
    #[error("digest mismatch: expected {expected}, found {actual}")]
    DigestMismatch { expected: String, actual: String },
}

impl StoreError {
    pub(crate) fn io(path: &Path, source: io::Error) -> Self {
        StoreError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub(crate) fn schema(path: &Path, source: SchemaError) -> Self {
        StoreError::Schema {
            path: path.to_path_buf(),
            source,
        }
    }

    pub(crate) fn invalid(id: &str, reason: impl Into<String>) -> Self {
        StoreError::InvalidRecord {
            id: id.to_string(),
            reason: reason.into(),
        }
    }
}

impl From<FileError> for StoreError {
    fn from(e: FileError) -> Self {
        match e {
            FileError::Io { path, source } => StoreError::Io { path, source },
            FileError::Schema { path, source } => StoreError::Schema { path, source },
        }
    }
}
