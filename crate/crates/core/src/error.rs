use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: line {line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("duplicate entry: {0}")]
    Duplicate(String),

    #[error("not found: {0}")]
    NotFound(String),

    #[error("size error: {0}")]
    Size(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("version mismatch: file has version {found}, this build reads version {supported}")]
    Version { found: u32, supported: u32 },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid data: {0}")]
    Data(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("numeric degeneracy: leverage of row {row} is {leverage} (>= 1 - 1e-12)")]
    Leverage { row: usize, leverage: f64 },

    #[error("degenerate geometry in feature `{0}`: zero denominator")]
    Geometry(String),

    #[error("insufficient raters (< 2) for faces: {0}")]
    Coverage(String),

    #[error("attribute lists do not align: {0}")]
    Alignment(String),

    #[error("out of bounds: {0}")]
    Bound(String),

    #[error("feature source mismatch: predictor expects `{expected}`, got `{found}`")]
    Source { expected: String, found: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<String>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }

    /// Process exit code for this error: 2 for usage/config problems, 1 for
    /// data or numeric failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Bound(_) => 2,
            _ => 1,
        }
    }
}
