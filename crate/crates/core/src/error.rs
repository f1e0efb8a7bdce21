use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid polygon: {0}")]
    InvalidPolygon(String),
    #[error("invalid bounding box: {0}")]
    InvalidBoundingBox(String),
    #[error("invalid radial contour: {0}")]
    InvalidRadialContour(String),
    #[error("invalid descriptor: {0}")]
    InvalidDescriptor(String),
    #[error("kept coefficient count {kept} out of range 1..={max} for {mode} truncation")]
    TruncationOutOfRange { kept: usize, max: usize, mode: &'static str },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("rasterization produced no pixels")]
    EmptyRaster,
    #[error("degenerate instance: {0}")]
    Degenerate(String),
    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("gradient check: {0}")]
    GradCheck(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
