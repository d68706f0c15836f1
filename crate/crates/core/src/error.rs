use thiserror::Error;

#[derive(Debug, Error)]
pub enum SosError {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParam { field: &'static str, reason: String },

    #[error("configuration has length {got}, expected {expected}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("shape #{index} of the catalog is not connected in the dual lattice")]
    DisconnectedShape { index: usize },

    #[error("shape #{index} of the catalog has no sites")]
    EmptyShape { index: usize },

    #[error("malformed catalog: {0}")]
    Catalog(String),

    #[error("state space of {estimate} states exceeds the cap of {cap}")]
    TooLarge { estimate: u128, cap: usize },

    #[error("generator is not reversible: pair ({i}, {j}) off by {defect:e} in log space")]
    NotReversible { i: usize, j: usize, defect: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("empty region: {0}")]
    EmptyRegion(&'static str),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, SosError>;
