// SPDX-License-Identifier: Apache-2.0

use std::io;
use std::path::PathBuf;

use thiserror::Error;

use crate::model::{AttestationId, Kind};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot canonicalize: {0}")]
    Canonicalization(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("format error: {0}")]
    Format(String),

    #[error("unsupported schema version {0:?}")]
    Schema(String),

    #[error("unsupported scheme {0:?}")]
    UnsupportedScheme(String),

    #[error("store integrity violated: {0}")]
    Integrity(String),

    #[error("object {id} does not hash to its name (recomputed {actual})")]
    DigestMismatch { id: AttestationId, actual: AttestationId },

    #[error("not found: {0}")]
    NotFound(String),

    #[error("{id} has kind {found}, expected {expected}")]
    Kind {
        id: AttestationId,
        expected: String,
        found: Kind,
    },

    #[error("version error: {0}")]
    Version(String),

    #[error("not authorized: {0}")]
    Authorization(String),

    #[error("reference cycle through {0}")]
    Cycle(AttestationId),

    #[error("store is locked by another writer ({})", .0.display())]
    Busy(PathBuf),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Usage and input problems as opposed to failures of the store or filesystem.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::Canonicalization(_)
                | Error::Format(_)
                | Error::Schema(_)
                | Error::UnsupportedScheme(_)
                | Error::NotFound(_)
                | Error::Kind { .. }
                | Error::Version(_)
                | Error::Authorization(_)
        )
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Format(e.to_string())
    }
}
