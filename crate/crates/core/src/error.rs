//! Error type shared across the library.
//!
//! Everything fallible returns [`Error`]. The [`Error::category`] split into
//! usage / data / io is what the CLI maps onto its exit codes, so when adding a
//! variant make sure it lands in the right bucket.

use std::path::PathBuf;

/// Coarse classification used by callers (mainly the CLI) to decide how to
/// report a failure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    /// Malformed or inconsistent input data (manifests, WAV content, JSON,
    /// dimension mismatches, degenerate training sets, ...).
    Data,
    /// Operating-system level I/O failure (missing file, permission, short
    /// read/write).
    Io,
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {msg}")]
    Manifest {
        path: PathBuf,
        /// 1-based line number in the manifest file.
        line: usize,
        msg: String,
    },

    #[error("unknown attack id {0:?} (expected A01..A16)")]
    UnknownAttack(String),

    #[error("attack {0} has no utterances in this corpus")]
    AttackAbsent(String),

    #[error("{path}: {msg}")]
    Wav { path: PathBuf, msg: String },

    #[error("{0}")]
    InvalidAudio(String),

    #[error("clip {utt_id:?} is too short: {got_s:.3} s (need at least {need_s:.3} s)")]
    ClipTooShort {
        utt_id: String,
        got_s: f64,
        need_s: f64,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("{0}")]
    InvalidInput(String),

    #[error("score set needs both classes: {0}")]
    SingleClass(String),

    #[error("feature {index} (F{index}) is not implemented in registry {version}")]
    FeatureUnavailable { index: usize, version: String },

    #[error("registry version mismatch: expected {expected}, found {found}")]
    RegistryMismatch { expected: String, found: String },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("training failed: {0}")]
    Training(String),

    #[error("embedding matrix is missing utterance {0:?}")]
    MissingUtterance(String),
}

impl Error {
    /// Which coarse bucket this error belongs to. Only raw I/O failures count
    /// as `Io`; everything else is a problem with the data itself.
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::Io { .. } => ErrorCategory::Io,
            _ => ErrorCategory::Data,
        }
    }

    /// Convenience for attaching a path to a `std::io::Error`.
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
