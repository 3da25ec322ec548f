use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("index {index} out of range for dimension {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("non-finite value {0}")]
    NonFinite(f64),

    #[error("invalid spin value {0} (expected -1 or +1)")]
    InvalidSpin(i64),

    #[error("{0} must not be empty")]
    Empty(&'static str),

    #[error("{name} = {value} is outside {range}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("weight matrix is not symmetric at ({row}, {col})")]
    Asymmetric { row: usize, col: usize },

    #[error("weight matrix has non-zero diagonal at {0}")]
    NonZeroDiagonal(usize),

    #[error("target unreachable: {0}")]
    Unreachable(String),

    #[error("could not place {wanted} bases at separation {min_distance} within {attempts} attempts")]
    SeparationUnsatisfiable {
        wanted: usize,
        min_distance: usize,
        attempts: usize,
    },

    #[error("dimension {n} exceeds the enumeration limit {max}")]
    TooLarge { n: usize, max: usize },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_unit_interval(name: &'static str, value: f64, hi: f64) -> Result<()> {
    if !value.is_finite() {
        return Err(Error::NonFinite(value));
    }
    if !(0.0..=hi).contains(&value) {
        let range = if hi == 0.5 { "[0, 0.5]" } else { "[0, 1]" };
        return Err(Error::OutOfRange { name, value, range });
    }
    Ok(())
}
