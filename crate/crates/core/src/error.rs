use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: String, got: String },

    #[error("invalid set: {0}")]
    InvalidSet(String),

    #[error("projection did not reach feasibility {tolerance:e} after {sweeps} sweeps (infeasibility {infeasibility:e})")]
    ProjectionNonconvergence {
        sweeps: usize,
        tolerance: f64,
        infeasibility: f64,
    },

    #[error("sampling error: {0}")]
    Sampling(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("size limit exceeded: {0}")]
    Size(String),

    #[error("evaluation error: {0}")]
    Evaluation(String),

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("conditions violated: {0}")]
    ConditionsViolated(String),

    #[error("direct solve unavailable (condition number {condition:e})")]
    OracleUnavailable { condition: f64 },
}
