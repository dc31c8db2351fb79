use chrono::NaiveDate;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("column `{missing}` not found; available columns: {}", available.join(", "))]
    Schema {
        missing: String,
        available: Vec<String>,
    },

    #[error("no valid price rows")]
    EmptyData,

    #[error("duplicate date {0}")]
    DuplicateDate(NaiveDate),

    #[error("row {row}: cannot parse date `{text}` (expected YYYY-MM-DD)")]
    InvalidDate { row: usize, text: String },

    #[error("row {row}: invalid price `{text}`")]
    InvalidPrice { row: usize, text: String },

    #[error("dates must be strictly increasing (violated at {0})")]
    UnorderedDates(NaiveDate),

    #[error("series has {dates} dates but {values} values")]
    LengthMismatch { dates: usize, values: usize },

    #[error("value at {date} must be finite and positive, got {value}")]
    NonPositive { date: NaiveDate, value: f64 },

    #[error("no samples between {from} and {to}")]
    EmptyWindow { from: NaiveDate, to: NaiveDate },

    #[error("day index {index} outside series range [{first}, {last}]")]
    OutOfBounds {
        index: usize,
        first: usize,
        last: usize,
    },

    #[error("degenerate window: {0}")]
    DegenerateWindow(String),

    #[error("series too short: need at least {needed} samples, got {got}")]
    TooShort { needed: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("value outside domain: {0}")]
    Domain(String),

    #[error("model knots do not cover the window: {0}")]
    Coverage(String),

    #[error("series are not aligned: {0}")]
    Misaligned(String),

    #[error("wrong price direction: {0}")]
    Direction(String),

    #[error("overlap of {got} samples is below the required {needed}")]
    InsufficientOverlap { needed: usize, got: usize },

    #[error("baseline RMS is zero (constant window)")]
    DegenerateBaseline,

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
