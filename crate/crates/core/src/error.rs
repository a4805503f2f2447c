use std::path::PathBuf;

use thiserror::Error;

use crate::model::Measure;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("format error: {0}")]
    Format(String),

    #[error("invalid manifest:\n{0}")]
    Manifest(crate::model::ManifestReport),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error(
        "insufficient frames for higher moments: {measure} needs at least 2 frames, got {frames}"
    )]
    InsufficientFrames { measure: Measure, frames: usize },

    #[error("invalid frame request: {requested} frames out of {total}")]
    FrameCount { requested: usize, total: usize },

    #[error("duplicate measure {0} in descriptor")]
    DuplicateMeasure(Measure),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("rank-deficient data: achievable rank is {rank}, requested {requested} components")]
    RankDeficient { rank: usize, requested: usize },

    #[error("need at least {needed} distinct points, got {got}")]
    TooFewPoints { needed: usize, got: usize },

    #[error("training set contains a single class")]
    SingleClass,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
