use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("invalid one-body density matrix: {0}")]
    InvalidRdm(String),
    #[error("wedge product vanishes")]
    ZeroState,
    #[error("invalid gate: {0}")]
    InvalidGate(String),
    #[error("invalid pulse: {0}")]
    InvalidPulse(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("unknown label `{0}`")]
    UnknownLabel(String),
    #[error("unsupported case: {0}")]
    Unsupported(String),
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("infeasible polytope: {0}")]
    Infeasible(String),
    #[error("invalid step size: {0}")]
    StepSize(String),
    #[error("sector mismatch: {0}")]
    SectorMismatch(String),
    #[error("mode pairs do not partition the modes: {0}")]
    InvalidPartition(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
