use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A configuration or argument value is out of its allowed range.
    #[error("invalid `{field}`: {reason}")]
    Validation { field: String, reason: String },

    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{}:{line}: missing required field `{field}`", path.display())]
    Schema {
        path: PathBuf,
        line: usize,
        field: String,
    },

    #[error("sequence of length {len} exceeds the model maximum of {max}")]
    Length { len: usize, max: usize },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("non-finite loss at step {step} (sample `{sample_id}`)")]
    NonFinite { step: usize, sample_id: String },

    #[error("outputs are not aligned by id; missing: {}", missing.join(", "))]
    Misaligned { missing: Vec<String> },

    #[error("example `{0}` carries no gold annotations; refusing to classify")]
    Unlabeled(String),

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn validation(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
