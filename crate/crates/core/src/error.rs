use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("normalization violated for input {input}: sum = {sum}")]
    Normalization { input: usize, sum: f64 },

    #[error("negative probability {value} at index {index}")]
    NegativeEntry { index: usize, value: f64 },

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("scenario mismatch: {0}")]
    ScenarioMismatch(String),

    #[error("parameter out of range: {0}")]
    OutOfRange(String),

    #[error("invalid quantum object: {0}")]
    InvalidQuantum(String),

    #[error("malformed linear program: {0}")]
    MalformedLp(String),

    #[error("linear program is infeasible")]
    Infeasible,

    #[error("linear program is unbounded")]
    Unbounded,

    #[error("numerically ambiguous result: {0}")]
    Ambiguous(String),

    #[error("behavior is signaling; refusing to build inflation")]
    Signaling,

    #[error("certificate rejected: {0}")]
    BadCertificate(String),

    #[error("non-monotone feasibility in visibility: {0}")]
    NonMonotone(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
