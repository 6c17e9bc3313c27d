use std::path::PathBuf;

use thiserror::Error;

use crate::panel::YearMonth;

pub type Result<T> = std::result::Result<T, Error>;

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

    // ingestion
    #[error("missing column `{0}` in CSV header")]
    MissingColumn(String),
    #[error("malformed date `{value}` at row {row}")]
    MalformedDate { row: usize, value: String },
    #[error("negative rainfall {value} at row {row}")]
    NegativeRainfall { row: usize, value: f64 },
    #[error("{rejected} of {total} rows rejected, above the {threshold} abort threshold")]
    TooManyRejected {
        rejected: usize,
        total: usize,
        threshold: f64,
    },
    #[error("district `{district}` has no data for {month}")]
    GapInCoverage { district: String, month: YearMonth },
    #[error("month {0} is outside the panel (or leaves an empty holdout)")]
    OutOfRange(YearMonth),
    #[error("no records to aggregate")]
    NoRecords,
    #[error("malformed panel: {0}")]
    MalformedPanel(String),

    // spatial
    #[error("district `{0}` has no station with coordinates")]
    NoStations(String),
    #[error("k = {k} exceeds the {available} available neighbours")]
    KTooLarge { k: usize, available: usize },
    #[error("unknown district `{0}`")]
    UnknownDistrict(String),

    // features
    #[error("descriptor window requested at year index {0}; at least one earlier year is needed")]
    WindowTooEarly(usize),

    // regression / network
    #[error("input contains non-finite values")]
    NonFiniteInput,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("need more than {needed} training samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("invalid model specification: {0}")]
    InvalidSpec(String),

    // forecasting
    #[error("history of {got} months is too short, need at least {needed}")]
    HistoryTooShort { needed: usize, got: usize },
    #[error("insufficient history for lags at month index {0}")]
    InsufficientHistory(usize),
    #[error("no yearly feature vector for year index {0}")]
    MissingYearlyFeature(usize),

    // evaluation
    #[error("series lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("normalizer must be positive, got {0}")]
    ZeroNormalizer(f64),
    #[error("training length {t0} too short for {k} folds of {h_val} months")]
    TooShort { t0: usize, k: usize, h_val: usize },
    #[error("forecast is misaligned with the panel: {0}")]
    Misalignment(String),
    #[error("search space is empty")]
    EmptySpace,

    // analytics
    #[error("baseline for district `{0}` has zero spread")]
    DegenerateBaseline(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
