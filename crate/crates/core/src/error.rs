use std::path::PathBuf;

use thiserror::Error;

/// Errors surfaced by the library.
///
/// Malformed individual records (a bad JSONL line, an unparsable lexicon row)
/// are not errors: they are skipped and counted. These variants cover what
/// cannot be skipped.
#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Format {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("vector dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("duplicate document id {0}")]
    DuplicateDocument(u64),

    #[error("missing feature `{0}` in feature vector")]
    MissingFeature(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unknown baseline `{name}`; valid names:\n  {}", valid.join("\n  "))]
    UnknownBaseline { name: String, valid: Vec<String> },

    #[error("stale or incompatible artifact {path}: {message}")]
    IncompatibleArtifact { path: PathBuf, message: String },

    #[error("query id {0} in results does not exist in ground truth")]
    UnknownQuery(u64),

    #[error("invalid ground truth: {0}")]
    GroundTruth(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(
        path: impl Into<PathBuf>,
        line: usize,
        message: impl Into<String>,
    ) -> Self {
        Error::Format {
            path: path.into(),
            line,
            message: message.into(),
        }
    }
}
