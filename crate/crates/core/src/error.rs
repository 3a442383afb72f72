use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the IMD pipeline.
#[derive(Debug, Error)]
pub enum ImdError {
    #[error("I/O error on {path:?}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("non-finite value at row {row}, column {column}")]
    NonFiniteValue { row: usize, column: usize },

    #[error("input contains no data")]
    EmptyInput,

    #[error("requested sample of {requested} rows exceeds the {available} available")]
    SampleTooLarge { requested: usize, available: usize },

    #[error("invalid k = {k} for {n} points (need 1 <= k < n)")]
    InvalidK { k: usize, n: usize },

    #[error("Lanczos start vector must have unit norm, got norm {norm}")]
    NonUnitStartVector { norm: f64 },

    #[error("dense oracle limited to n <= {cap}, got n = {n}")]
    TooLargeForOracle { n: usize, cap: usize },

    #[error("temperature grids differ")]
    GridMismatch,

    #[error("null model requires average degree > 4, got {0}")]
    DegenerateNullModel(f64),

    #[error("unsupported descriptor version {found} (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },

    #[error("descriptor schema error: {0}")]
    Schema(String),

    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("at least {needed} samples required, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

impl ImdError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        ImdError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, ImdError>;
