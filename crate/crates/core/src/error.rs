use thiserror::Error;

/// Errors raised by the tiltlab operations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("unknown family or function id `{0}`")]
    UnknownId(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("non-monotone table: {0}")]
    NonMonotoneTable(String),
    #[error("operation needs a convex admissible function or a closed-form derivative: {0}")]
    NotConvex(String),
    #[error("inverse derivative unavailable: {0}")]
    InverseUnavailable(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("no finite value in the requested region: {0}")]
    EmptyRegion(String),
    #[error("function is identically +inf")]
    ImproperFunction,
    #[error("function appears unbounded below: {0}")]
    UnboundedBelow(String),
    #[error("gradient undefined: {0}")]
    GradientUndefined(String),
    #[error("point is not on the graph: {0}")]
    OffGraph(String),
    #[error("function value at the point is +inf")]
    InfiniteValue,
    #[error("base point is not a localized minimizer: {0}")]
    NotLocalMinimizer(String),
    #[error("invalid sweep specification: {0}")]
    InvalidSweep(String),
    #[error("missing instance component: {0}")]
    MissingComponent(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
