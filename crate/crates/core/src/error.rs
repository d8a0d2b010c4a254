use thiserror::Error;

/// Errors raised by cone construction, pseudo-cone calculus and the solvers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("cone is not pointed: it contains a line")]
    NotPointed,

    #[error("cone is not full-dimensional: generators span a {rank}-dimensional subspace of R^{dim}")]
    NotFullDimensional { dim: usize, rank: usize },

    #[error("unsupported dimension {0} (supported: 2, 3, 4)")]
    UnsupportedDimension(usize),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("inconsistent cone description: {0}")]
    InconsistentCone(String),

    #[error("cap {cap} contains no direction at interior margin {margin:e}")]
    EmptyCap { cap: &'static str, margin: f64 },

    #[error("direction {coords:?} is not strictly inside {cap} (margin {margin:e})")]
    DirectionOutsideCap {
        coords: Vec<f64>,
        cap: &'static str,
        margin: f64,
    },

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("invalid pseudo-cone: {0}")]
    InvalidPseudoCone(String),

    #[error("sampled function has no samples")]
    EmptySamples,

    #[error("pair is (nearly) orthogonal: |<u,v>| = {dot:e}")]
    OrthogonalPair { dot: f64 },

    #[error("pair is nearly orthogonal: |<u,v>| = {dot:e} below eps_pair = {eps_pair:e}; support too close to the cap boundary")]
    NearOrthogonalPair { dot: f64, eps_pair: f64 },

    #[error("linear program is unbounded; the pseudo-cone description is malformed")]
    Unbounded,

    #[error("linear program is infeasible: {0}")]
    Infeasible(String),

    #[error("instance too large: {got} atoms exceeds the limit of {limit}")]
    SizeLimit { got: usize, limit: usize },

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("infeasible geometry: {0}")]
    InfeasibleGeometry(String),

    #[error("certification failed: {0}")]
    CertificationFailed(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("truncation is empty: no atom of nu has interior margin >= {margin:e}")]
    EmptyTruncation { margin: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
