use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("point {point:?} outside domain [{min:?}, {max:?}]")]
    Domain {
        point: [f64; 3],
        min: [f64; 3],
        max: [f64; 3],
    },
    #[error("parameter value {0} outside [0, 1]")]
    ParamRange(f64),
    #[error("cannot partition {dims:?} with {levels} levels: {reason}")]
    Partition {
        dims: [usize; 3],
        levels: u32,
        reason: String,
    },
    #[error("size mismatch for {path}: expected {expected} bytes, found {found}")]
    SizeMismatch {
        path: PathBuf,
        expected: u64,
        found: u64,
    },
    #[error("model format: {0}")]
    Format(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("camera: {0}")]
    Camera(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("pipeline failure at worker {worker}, round {round}: {reason}")]
    Pipeline {
        worker: usize,
        round: usize,
        reason: String,
    },
    #[error("document parse error at line {line}: {reason}")]
    Document { line: usize, reason: String },
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }

    /// Short machine-readable tag used in CLI and service error lines.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Parameter(_) => "parameter",
            Error::Domain { .. } | Error::ParamRange(_) => "domain",
            Error::Partition { .. } => "partition",
            Error::SizeMismatch { .. } => "size_mismatch",
            Error::Format(_) => "format",
            Error::Numeric(_) => "numeric",
            Error::Camera(_) => "camera",
            Error::Dimension(_) => "dimension",
            Error::Pipeline { .. } => "pipeline",
            Error::Document { .. } => "document",
            Error::Io { .. } => "io",
        }
    }
}
