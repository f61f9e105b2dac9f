use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("NoFrames: {0}")]
    NoFrames(String),

    #[error("DimensionMismatch: expected {expected_w}x{expected_h}, got {actual_w}x{actual_h}")]
    DimensionMismatch {
        expected_w: usize,
        expected_h: usize,
        actual_w: usize,
        actual_h: usize,
    },

    #[error("DecodeError: {path}: {reason}")]
    DecodeError { path: PathBuf, reason: String },

    #[error("FrameTooSmall: {width}x{height}, need at least 3x3")]
    FrameTooSmall { width: usize, height: usize },

    #[error("RectOutOfBounds: ({x},{y}) {w}x{h} outside {frame_w}x{frame_h}")]
    RectOutOfBounds {
        x: usize,
        y: usize,
        w: usize,
        h: usize,
        frame_w: usize,
        frame_h: usize,
    },

    #[error("FrameIndexOutOfRange: {index} >= {count}")]
    FrameIndexOutOfRange { index: usize, count: usize },

    #[error("InvalidFrame: {0}")]
    InvalidFrame(String),

    #[error("CaptionOutOfBounds: {0}")]
    CaptionOutOfBounds(String),

    #[error("InvalidConfig: {key}: {reason}")]
    InvalidConfig { key: String, reason: String },

    #[error("Json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("Io: {path}: {source}")]
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

    pub(crate) fn config(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidConfig {
            key: key.into(),
            reason: reason.into(),
        }
    }
}
