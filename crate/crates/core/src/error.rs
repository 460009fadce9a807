use thiserror::Error;

/// Errors raised by grid, form and connection operations.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("axis {axis} out of range for a {dim}-dimensional grid")]
    AxisOutOfRange { axis: usize, dim: usize },
    #[error("sample index {index} out of range for an axis with {len} samples")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("grid mismatch between operands")]
    GridMismatch,
    #[error("rank mismatch: {0} vs {1}")]
    RankMismatch(usize, usize),
    #[error("degree error: {0}")]
    Degree(String),
    #[error("grid has no distinguished circle")]
    NoDistinguishedCircle,
    #[error("unsupported domain: {0}")]
    UnsupportedDomain(String),
    #[error("form is not closed: defect {defect:e} exceeds {tol:e}")]
    NotClosed { defect: f64, tol: f64 },
    #[error("singular matrix at grid point {0}")]
    Singular(usize),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("schema error: {0}")]
    Schema(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
