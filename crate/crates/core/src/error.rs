use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected_width}x{expected_height}, got {width}x{height}")]
    DimensionMismatch {
        expected_width: usize,
        expected_height: usize,
        width: usize,
        height: usize,
    },

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("no path between node {from} and node {to}")]
    NoPath { from: usize, to: usize },

    #[error("depth alignment failed for keyframe {frame}: no ray hit the fused geometry")]
    AlignmentFailure { frame: usize },

    #[error("non-finite attribute at frame {t}, row {row}, column {col}, channel {channel}")]
    Decode {
        t: usize,
        row: usize,
        col: usize,
        channel: usize,
    },

    #[error("format error in {path} at byte {offset}: {message}")]
    Format {
        path: String,
        offset: usize,
        message: String,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn domain(message: impl Into<String>) -> Self {
        Error::Domain(message.into())
    }

    pub(crate) fn format(path: impl Into<String>, offset: usize, message: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            offset,
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short machine-readable tag used by the command-line error records.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::DimensionMismatch { .. } => "dimension-mismatch",
            Error::DegenerateInput(_) => "degenerate-input",
            Error::NoPath { .. } => "no-path",
            Error::AlignmentFailure { .. } => "alignment-failure",
            Error::Decode { .. } => "decode",
            Error::Format { .. } => "format",
            Error::Io { .. } => "io",
        }
    }
}
