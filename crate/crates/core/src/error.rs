use crate::design::{Axis, SourceId};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("axis {axis} needs at least 2 levels, got {count}")]
    InvalidDims { axis: Axis, count: usize },

    #[error("axis {axis} has {found} distinct label(s); at least 2 are required")]
    TooFewLevels { axis: Axis, found: usize },

    #[error("duplicate observation for cell (h,i,j,k) = {0:?}")]
    DuplicateCell([usize; 4]),

    #[error("no observation for cell (h,i,j,k) = {0:?}")]
    MissingCell([usize; 4]),

    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("index {index} out of range for axis {axis} with {len} levels")]
    IndexOutOfRange { axis: Axis, index: usize, len: usize },

    #[error("expected {expected} values, got {found}")]
    ShapeMismatch { expected: usize, found: usize },

    #[error("empty list of mean squares")]
    EmptyList,

    #[error("domain error: {0}")]
    Domain(String),

    #[error("denominator mean square sum for {tested} is not positive ({value})")]
    NonPositiveDenominator { tested: SourceId, value: f64 },

    #[error("F test for {tested} is not exact; residual expectation {residual}")]
    ExactnessViolation { tested: SourceId, residual: String },

    #[error("covariance matrix for {cells} cells exceeds the {limit}-cell guard")]
    SizeGuardExceeded { cells: usize, limit: usize },

    #[error("invalid simulation spec: {0}")]
    InvalidSimSpec(String),

    #[error("invalid model variant {0:?}: expected three letters from {{F, R}}, e.g. \"FFR\"")]
    InvalidModel(String),

    #[error("unknown source {0:?}")]
    UnknownSource(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
