use std::path::PathBuf;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("cannot access {}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("duplicate response id {0:?}")]
    DuplicateId(String),

    #[error("empty response text for ids {0:?}")]
    EmptyResponses(Vec<String>),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: String, found: Vec<u8> },

    #[error("unsupported format version {found} (expected {expected})")]
    UnsupportedVersion { expected: u32, found: u32 },

    #[error("truncated payload: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },

    #[error("header declares {expected} payload bytes but file carries {found}")]
    SizeMismatch { expected: usize, found: usize },

    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("alignment mismatch: {what} has {found} entries, expected {expected}")]
    Alignment {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("comparison graph is disconnected; unreachable items: {0:?}")]
    Disconnected(Vec<String>),

    #[error("maximum-likelihood estimate diverges for item {item:?}: {reason}")]
    DivergentItem { item: String, reason: String },

    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(String),

    #[error("training diverged at epoch {epoch}: loss is {loss}")]
    Diverged { epoch: usize, loss: f64 },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
