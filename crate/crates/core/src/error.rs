use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input")]
    EmptyInput,

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("feature groups {first} and {second} both contain column {column}")]
    OverlappingGroups {
        first: usize,
        second: usize,
        column: usize,
    },

    #[error("feature index {index} out of range for {n_features} features")]
    OutOfRange { index: usize, n_features: usize },

    #[error("feature group {0} is empty")]
    EmptyGroup(usize),

    #[error("need at least {required} feature groups, got {actual}")]
    GroupCountTooSmall { required: usize, actual: usize },

    #[error("expected exactly {expected} feature groups, got {actual}")]
    GroupCountMismatch { expected: usize, actual: usize },

    #[error("degenerate split: {0}")]
    DegenerateSplit(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("tree references feature {index} but input has {n_cols} columns")]
    FeatureIndexOutOfRange { index: usize, n_cols: usize },

    #[error("lag order {order} is not smaller than series length {len}")]
    LagTooLarge { order: usize, len: usize },

    #[error("rolling window {window} invalid for series length {len}")]
    WindowTooLarge { window: usize, len: usize },

    #[error("degenerate scaler range (min = max = {0})")]
    DegenerateRange(f64),

    #[error("singular regression design")]
    SingularRegression,

    #[error("parse error at row {row}, column '{column}': {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    #[error("target column '{0}' is not numeric")]
    NonNumericTarget(String),

    #[error("unknown loss '{0}'")]
    UnknownLoss(String),

    #[error("trial {trial} (seed {seed}) failed: {source}")]
    Trial {
        trial: usize,
        seed: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::UnknownLoss(_) => 2,
            Error::Parse { .. }
            | Error::NonNumericTarget(_)
            | Error::InvalidDataset(_)
            | Error::NonFinite { .. }
            | Error::Csv(_)
            | Error::OverlappingGroups { .. }
            | Error::OutOfRange { .. }
            | Error::EmptyGroup(_)
            | Error::LagTooLarge { .. }
            | Error::WindowTooLarge { .. }
            | Error::DegenerateSplit(_) => 3,
            _ => 4,
        }
    }
}
