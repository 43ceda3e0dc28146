use chrono::NaiveDateTime;
use thiserror::Error;

/// Errors raised across the forecasting pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error in {path}: {message}")]
    Csv { path: String, message: String },

    #[error("duplicate timestamp {0} in input file")]
    DuplicateTimestamp(NaiveDateTime),

    #[error("timestamps are not strictly increasing at {0}")]
    NonMonotonicTimestamp(NaiveDateTime),

    #[error("schema/header mismatch: {0}")]
    SchemaMismatch(String),

    #[error("unknown channel '{0}'")]
    UnknownChannel(String),

    #[error("invalid split: {0}")]
    InvalidSplit(String),

    #[error("empty partition: {0}")]
    EmptyPartition(String),

    #[error("series too short: need at least {needed} values, got {got}")]
    SeriesTooShort { needed: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unknown feature group '{0}'")]
    UnknownFeatureGroup(String),

    #[error("feature group '{group}' is not compatible with model '{model}'")]
    IncompatibleFeatureGroup { group: String, model: String },

    #[error("matrix too short for windowing: {rows} rows, need {needed}")]
    WindowingTooShort { rows: usize, needed: usize },

    #[error("input layout mismatch: model expects {expected} features, got {got}")]
    LayoutMismatch { expected: usize, got: usize },

    #[error("training diverged (non-finite loss) at epoch {epoch}")]
    Divergence { epoch: usize },

    #[error("corrupt model file: {0}")]
    CorruptModelFile(String),

    #[error("unsupported model file version: expected {expected}, got {got}")]
    ModelVersionMismatch { expected: u32, got: u32 },

    #[error("metric undefined: {0}")]
    MetricUndefined(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
