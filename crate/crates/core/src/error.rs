use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),

    #[error("duplicate variable `{0}`")]
    DuplicateVariable(String),

    #[error("variable `{0}` has an empty range")]
    EmptyRange(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid probability table: {0}")]
    InvalidTable(String),

    #[error("variable sets overlap on `{0}`")]
    OverlappingVariables(String),

    #[error("zero-probability conditioning cell {cell}")]
    ZeroConditioning { cell: String },

    #[error("support violation at cell {cell}: p > 0 where q = 0")]
    SupportViolation { cell: String },

    #[error("input dimension {dimension} exceeds the grid limit {limit}; enable approximate mode")]
    DimensionLimit { dimension: usize, limit: usize },

    #[error("inconsistent system: dependent row {row} has residual {residual:e}")]
    Inconsistent { row: usize, residual: f64 },

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error(
        "vertex enumeration needs {combinations} sub-matrices (limit {limit}); use coarser ranges"
    )]
    CombinatorialLimit { combinations: u128, limit: u128 },

    #[error("{what} is numerically singular (condition number {condition:e}); increase lambda")]
    Singular { what: &'static str, condition: f64 },

    #[error("conditional P({0}) is undefined: denominator is zero over the whole identified set")]
    UndefinedConditional(String),

    #[error("value {value} in column `{column}` is outside the variable range")]
    OutOfRange { column: String, value: f64 },

    #[error("linear program failed: {0}")]
    Lp(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for errors caused by malformed or mismatched input, as opposed to
    /// infeasibility or numerical failure.
    pub fn is_input_error(&self) -> bool {
        !matches!(
            self,
            Error::Inconsistent { .. }
                | Error::Infeasible(_)
                | Error::Singular { .. }
                | Error::UndefinedConditional(_)
                | Error::Lp(_)
                | Error::CombinatorialLimit { .. }
                | Error::ZeroConditioning { .. }
                | Error::SupportViolation { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
