use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by the explanation engine.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-positive value {value} at index {index}")]
    NonPositiveValue { index: usize, value: f64 },

    #[error("non-positive target {value} at row {row}")]
    NonPositiveTarget { row: usize, value: f64 },

    #[error("non-positive prediction {value} at row {row}")]
    NonPositivePrediction { row: usize, value: f64 },

    #[error("shape mismatch: expected {expected}, found {found}")]
    Shape { expected: String, found: String },

    #[error("rank-deficient system (condition estimate {condition:.3e})")]
    RankDeficient { condition: f64 },

    #[error("too many features for exact enumeration: {m} > {max}")]
    TooManyFeatures { m: usize, max: usize },

    #[error("explanation failed: {0}")]
    Explanation(String),

    #[error("external model: {0}")]
    ExternalModel(String),
}

impl Error {
    pub(crate) fn shape(expected: impl ToString, found: impl ToString) -> Self {
        Error::Shape {
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }
}
