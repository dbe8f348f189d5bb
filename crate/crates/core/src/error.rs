use std::path::PathBuf;

use thiserror::Error;

use crate::timeseries::Month;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input")]
    EmptyInput,

    #[error("invalid window: {0}")]
    InvalidWindow(usize),

    #[error("invalid month: {0}")]
    InvalidMonth(String),

    #[error("no overlap between {a} and {b}")]
    NoOverlap { a: String, b: String },

    #[error("series are not aligned: {0}")]
    Misaligned(String),

    #[error("insufficient history: need {needed} defined months, got {got}")]
    InsufficientHistory { needed: usize, got: usize },

    #[error("undefined values are only allowed as a leading warm-up prefix (first interior gap at {0})")]
    InteriorUndefined(Month),

    #[error("no crossing: previous {prev} and current {curr} do not cross threshold {threshold}")]
    NoCrossing { prev: f64, curr: f64, threshold: f64 },

    #[error("invalid threshold: {0}")]
    InvalidThreshold(String),

    #[error("negative input: {0}")]
    NegativeInput(String),

    #[error("no admissible threshold: {0}")]
    NoAdmissibleThreshold(String),

    #[error("invalid calendar: {0}")]
    InvalidCalendar(String),

    #[error("gap at {0}")]
    Gap(Month),

    #[error("duplicate month {0}")]
    DuplicateMonth(Month),

    #[error("months out of order at {0}")]
    OutOfOrder(Month),

    #[error("row {row}: {message}")]
    Parse { row: usize, message: String },

    #[error("non-positive denominator {value} at {month}")]
    NonPositiveDenominator { month: Month, value: f64 },

    #[error("zero or undefined value at anchor {0}")]
    BadAnchor(Month),

    #[error("coverage gap at splice cutover {0}")]
    SpliceGap(Month),

    #[error("{series} covers {available}, but {needed} is required")]
    Coverage {
        series: String,
        needed: String,
        available: String,
    },

    #[error("missing source for {series}: {}", path.display())]
    MissingSource { series: String, path: PathBuf },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("http error (retriable): {0}")]
    Http(String),

    #[error("malformed payload: {0}")]
    Payload(String),

    #[error("io error on {}: {source}", path.display())]
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
}
