use thiserror::Error;

/// Errors raised by the model, design and inference layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("age {age} outside model domain [{lo}, {hi}]")]
    AgeOutOfDomain { age: f64, lo: f64, hi: f64 },

    #[error("time {t} precedes cohort birth at {birth}")]
    TimeBeforeBirth { t: f64, birth: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("cohort grid does not cover birth times [{need_lo}, {need_hi}]")]
    GridTooNarrow { need_lo: f64, need_hi: f64 },

    #[error("quadrature did not converge on [{lo}, {hi}]")]
    QuadratureNonConvergence { lo: f64, hi: f64 },

    #[error("empty sample")]
    EmptySample,

    #[error("lag {lag} too large for series of length {len}")]
    LagTooLarge { lag: usize, len: usize },

    #[error("series has zero variance")]
    DegenerateVariance,

    #[error("error values must be positive, got {0}")]
    NonPositiveError(f64),

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid config: {0}")]
    Config(String),

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
