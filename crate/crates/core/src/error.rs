use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid block layout: {0}")]
    InvalidBlockLayout(String),

    #[error("non-positive precision at index {index}: {value}")]
    NonPositivePrecision { index: usize, value: f64 },

    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),

    #[error("matrix is not positive definite (pivot {pivot} <= 0)")]
    NotPositiveDefinite { pivot: usize },

    #[error("matrix is not symmetric within tolerance")]
    NotSymmetric,

    #[error("all reference values are zero")]
    DivisionByZero,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: usize,
        message: String,
    },

    #[error("wrong column count at row {row}: expected {expected}, found {found}")]
    WrongColumnCount {
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("image format error: {0}")]
    ImageFormat(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
