use thiserror::Error;

/// Errors raised by the geometry, resolvent and algorithm layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProxError {
    #[error("points are (numerically) antipodal; the geodesic between them is not unique")]
    AntipodalPoints,

    #[error("tangent step of length {length} reaches the cut locus (limit {limit})")]
    StepTooLong { length: f64, limit: f64 },

    #[error("degenerate edge: the two endpoints coincide (distance {0:e})")]
    DegenerateEdge(f64),

    #[error("distance {distance} violates the admissible bound {limit}")]
    DomainViolation { distance: f64, limit: f64 },

    #[error("inner solver stalled after {iterations} iterations (stationarity {stationarity:e})")]
    InnerSolverStalled { iterations: usize, stationarity: f64 },

    #[error("indicator objective has no subgradient outside its ball")]
    NonsmoothAtInfeasible,

    #[error("operation supports intrinsic dimension 2 only, got {0}")]
    UnsupportedDimension(usize),

    #[error("objective is +inf at the starting point")]
    NonFiniteObjective,

    #[error("component {0} has no Lipschitz bound and per-iterate condition checking is disabled")]
    MissingLipschitzBound(usize),

    #[error("point is not a fixed point of the resolvent (residual {0:e})")]
    NotAFixedPoint(f64),

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, ProxError>;
