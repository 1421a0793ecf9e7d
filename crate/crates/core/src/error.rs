use thiserror::Error;

/// Errors raised by the walk, chain, bridge and conductance routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("node index {node} out of range for {n} nodes")]
    NodeOutOfRange { node: usize, n: usize },

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("matrix is not column-stochastic: {0}")]
    NotStochastic(String),

    #[error("locality violated: {0}")]
    NotLocal(String),

    #[error("operator is not unitary (residual {residual:.3e})")]
    NotUnitary { residual: f64 },

    #[error("invalid density operator: {0}")]
    InvalidDensity(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{what} has {n} elements, limit is {max}")]
    TooLarge { what: &'static str, n: usize, max: usize },

    #[error("chain is reducible")]
    Reducible,

    #[error("no convergence after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("infeasible transport: max-flow value {value:.12} < 1")]
    Infeasible { value: f64 },

    #[error("distribution is not invariant: {0}")]
    NotInvariant(String),

    #[error("linear program: {0}")]
    Lp(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
