use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("inconsistent input: {0}")]
    Consistency(String),

    #[error("unknown class {label:?} (not in taxonomy)")]
    Taxonomy { label: String },

    #[error(transparent)]
    Label(#[from] LabelError),

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: corrupt point cloud ({len} bytes is not a multiple of 16)")]
    CorruptCloud { path: PathBuf, len: u64 },

    #[error("{path}: non-finite values in points {indices:?}")]
    NonFinitePoints { path: PathBuf, indices: Vec<usize> },

    #[error("{path}: frame {frame_id} already exists")]
    Conflict { path: PathBuf, frame_id: String },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}

/// Failure to parse one label line.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("label line {line}, field {field}: {kind}")]
pub struct LabelError {
    /// 1-based line number within the file.
    pub line: usize,
    /// 0-based field index; equals the field count for count errors.
    pub field: usize,
    pub kind: LabelErrorKind,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LabelErrorKind {
    #[error("expected 15 or 16 fields, found {0}")]
    FieldCount(usize),
    #[error("not a number: {0:?}")]
    NotNumeric(String),
    #[error("non-finite value {0:?}")]
    NonFinite(String),
    #[error("class label {0:?} contains whitespace or is empty")]
    BadClass(String),
    #[error("dimension {0} is not strictly positive")]
    NonPositiveDimension(f64),
}
