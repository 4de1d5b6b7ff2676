use std::path::PathBuf;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{op}: shape mismatch: {left:?} vs {right:?}")]
    ShapeMismatch {
        op: &'static str,
        left: Vec<usize>,
        right: Vec<usize>,
    },

    #[error("{op}: {msg}")]
    InvalidArgument { op: &'static str, msg: String },

    #[error("non-finite value in loss part `{part}`")]
    NonFinite { part: String },

    #[error("NaN gradient for parameter `{name}`")]
    NanGradient { name: String },

    #[error("unsupported format version `{found}` (expected `{expected}`)")]
    Version { found: String, expected: String },

    #[error("truncated blob {path}")]
    Truncated { path: PathBuf },

    #[error("checksum mismatch in {path}")]
    Checksum { path: PathBuf },

    #[error("malformed data in {path}: {msg}")]
    Malformed { path: PathBuf, msg: String },

    #[error("incompatible checkpoint: {0}")]
    Incompatible(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(op: &'static str, msg: impl Into<String>) -> Self {
        Error::InvalidArgument {
            op,
            msg: msg.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
