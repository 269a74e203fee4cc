use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("header mismatch: expected {expected:?}, found {found:?}")]
    HeaderMismatch {
        expected: Vec<String>,
        found: Vec<String>,
    },

    #[error("data row {row}, column {column:?}: cannot parse {value:?} as {expected}")]
    Parse {
        row: usize,
        column: String,
        value: String,
        expected: &'static str,
    },

    #[error("data row {row}, column {column:?}: unknown level {label:?}")]
    UnknownLevel {
        row: usize,
        column: String,
        label: String,
    },

    #[error("invalid schema: {0}")]
    Schema(String),

    #[error("invalid dataset: {0}")]
    Dataset(String),

    #[error("requested {requested} rows but only {available} are available")]
    SampleTooLarge { requested: usize, available: usize },

    #[error("variable {variable:?}: {found} distinct values cannot form {bins} non-degenerate bins")]
    DegenerateBinning {
        variable: String,
        bins: usize,
        found: usize,
    },

    #[error("variable {variable:?}: merging rare levels would leave {remaining} level(s)")]
    TooFewLevels { variable: String, remaining: usize },

    #[error("variable {variable:?} is constant over its observed cells")]
    ConstantColumn { variable: String },

    #[error("variable {variable:?} has no observed values")]
    AllMissing { variable: String },

    #[error("conditioning variable {variable:?} has missing cells")]
    ConditioningMissing { variable: String },

    #[error("{what} did not converge after {iterations} iterations")]
    NoConvergence { what: &'static str, iterations: usize },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("unseen level {level} for feature {feature} at a split node")]
    UnseenLevel { feature: usize, level: u32 },

    #[error("non-finite {what} at step {step}")]
    NonFinite { what: &'static str, step: usize },

    #[error("metric undefined: {0}")]
    MetricUndefined(String),

    #[error("invalid configuration: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
