use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum EmotionError {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed json in {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("unknown micro-gesture label '{0}'")]
    UnknownLabel(String),
    #[error("malformed masking table: {reason}\n--- raw response ---\n{raw}")]
    TableParse { reason: String, raw: String },
    #[error("masked table has {found} rows for {expected} transcript entries")]
    Alignment { expected: usize, found: usize },
    #[error("masked row {row} has timestamp {found}, transcript entry has {expected}")]
    TimestampMismatch { row: usize, expected: f64, found: f64 },
    #[error("missing '{0}' block in response")]
    MissingBlock(&'static str),
    #[error("{block}: score '{value}' is not an integer")]
    NonIntegerScore { block: &'static str, value: String },
    #[error("{block}: score {value} outside [0, 100]")]
    ScoreRange { block: &'static str, value: i64 },
    #[error("{block}: confidence sum ≠ 100 (win {win} + lose {lose} = {})", win + lose)]
    ConfidenceSum { block: &'static str, win: i64, lose: i64 },
    #[error("video {video}: {found} runs, need at least {k}")]
    TooFewRuns { video: String, found: usize, k: usize },
    #[error("no ground truth for video {0}")]
    MissingGroundTruth(String),
    #[error("mock fixture {0} not found")]
    MissingFixture(PathBuf),
    #[error("chat endpoint error: {0}")]
    Transport(String),
}

impl EmotionError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        EmotionError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn json(path: impl Into<PathBuf>, source: serde_json::Error) -> Self {
        EmotionError::Json {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, EmotionError>;
