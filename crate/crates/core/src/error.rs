use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Coarse classification of an [`Error`], used by the CLI to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Usage,
    Data,
    Training,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("table has no rows")]
    EmptyTable,
    #[error("column `{0}` not found")]
    MissingColumn(String),
    #[error("duplicate column name `{0}`")]
    DuplicateColumn(String),
    #[error("target column `{column}` is not binary: {reason}")]
    TargetNotBinary { column: String, reason: String },
    #[error("row {row}: column `{column}` has unseen category `{value}`")]
    UnseenCategory {
        row: usize,
        column: String,
        value: String,
    },
    #[error("row {row}: column `{column}` has non-numeric value `{value}`")]
    NonNumeric {
        row: usize,
        column: String,
        value: String,
    },
    #[error("row {row}: column `{column}` is missing but the schema does not allow it")]
    UnexpectedMissing { row: usize, column: String },
    #[error("row {row} has {found} cells, header has {expected}")]
    RaggedRow {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("labels must be 0 or 1, found {0}")]
    InvalidLabel(u8),
    #[error("length mismatch: {what} ({left} vs {right})")]
    LengthMismatch {
        what: &'static str,
        left: usize,
        right: usize,
    },
    #[error("only one class present")]
    SingleClass,
    #[error("no positive labels")]
    NoPositives,
    #[error("feature width mismatch: model expects {expected}, got {found}")]
    WidthMismatch { expected: usize, found: usize },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("class {class} has {count} rows, need at least {needed}")]
    ClassTooSmall {
        class: u8,
        count: usize,
        needed: usize,
    },
    #[error("training diverged: {0}")]
    Diverged(String),
    #[error("configuration {config} fold {fold}: {source}")]
    Task {
        config: usize,
        fold: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("unsupported format version {found} (expected {expected})")]
    FormatVersion { expected: u32, found: u32 },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::InvalidParameter(_) => ErrorKind::Usage,
            Error::Diverged(_) | Error::NonFinite(_) => ErrorKind::Training,
            Error::Task { source, .. } => match source.kind() {
                ErrorKind::Data => ErrorKind::Data,
                _ => ErrorKind::Training,
            },
            _ => ErrorKind::Data,
        }
    }
}
