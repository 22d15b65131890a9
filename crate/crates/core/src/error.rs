use thiserror::Error;

/// Errors produced while reading, validating or evaluating event data.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid geometry {width}x{height}: both dimensions must be at least 1")]
    InvalidGeometry { width: u32, height: u32 },

    #[error("line {line}: {reason}")]
    MalformedLine { line: usize, reason: String },

    #[error("event {index} at ({x}, {y}) is outside the {width}x{height} sensor")]
    OutOfBounds {
        index: usize,
        x: u32,
        y: u32,
        width: u32,
        height: u32,
    },

    #[error("invalid timestamp {t} at index {index}")]
    InvalidTimestamp { index: usize, t: f64 },

    #[error("decreasing timestamp at index {index}")]
    DecreasingTimestamp { index: usize },

    #[error("unsupported magic number {0:?}")]
    UnsupportedMagic(String),

    #[error("unsupported maxval {0}")]
    UnsupportedMaxval(u32),

    #[error("invalid PGM: {0}")]
    InvalidPgm(String),

    #[error("truncated payload: expected {expected} pixels, found {found}")]
    Truncated { expected: usize, found: usize },

    #[error("geometry mismatch: {left} vs {right}")]
    GeometryMismatch { left: String, right: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("no ground truth for event at t={t} ({x}, {y})")]
    MissingTruth { t: f64, x: u32, y: u32 },
}

pub type Result<T> = std::result::Result<T, Error>;
