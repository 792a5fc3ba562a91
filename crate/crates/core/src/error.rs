use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is singular at the pivot tolerance")]
    SingularMatrix,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("non-finite value encountered: {0}")]
    NonFinite(String),
    #[error("ill-conditioned computation: {0}")]
    IllConditioned(String),
    #[error("matrix dimension {0} exceeds the supported maximum of {max}", max = crate::numerics::MAX_DIM)]
    DimensionTooLarge(usize),
    #[error("point arity {got} does not match basis arity {expected}")]
    ArityMismatch { expected: usize, got: usize },
    #[error("invalid basis: {0}")]
    InvalidBasis(String),
    #[error("design measure has no support points")]
    EmptySupport,
    #[error("invalid design measure: {0}")]
    InvalidMeasure(String),
    #[error("parameter out of range: {0}")]
    ParameterOutOfRange(String),
    #[error("solver did not converge from {} start(s)", failed_starts.len())]
    NoConvergence { failed_starts: Vec<(f64, f64)> },
    #[error("payoff matrix is empty")]
    EmptyPayoff,
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("overlapping arguments: {0}")]
    OverlappingArguments(String),
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("graph has a directed cycle")]
    CyclicGraph,
    #[error("graph has {0} nodes; subset enumeration is capped at {max}", max = crate::causal::MAX_ENUMERATION_NODES)]
    GraphTooLarge(usize),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("stratum weights invalid: {0}")]
    WeightMismatch(String),
    #[error("invalid group data: {0}")]
    InvalidGroups(String),
}
