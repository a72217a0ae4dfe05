use thiserror::Error;

/// Errors produced across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected} entries, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("negative entry {value} at output {output}, input {input}")]
    NegativeEntry {
        output: usize,
        input: usize,
        value: String,
    },

    #[error("column for input {input} sums to {sum}, not 1")]
    NotNormalized { input: usize, sum: String },

    #[error("scenario mismatch: {0}")]
    ScenarioMismatch(String),

    #[error("operation requires d = 2, scenario has d = {0}")]
    NotDichotomic(usize),

    #[error("empty party subset")]
    EmptySubset,

    #[error("correlator out of range: |{0}| > 1")]
    CorrelatorOutOfRange(String),

    #[error("correlator table does not reconstruct a valid behavior: p({output}|{input}) = {value}")]
    ReconstructedNegative {
        output: usize,
        input: usize,
        value: String,
    },

    #[error("exact-rational mode required for this operation")]
    RationalModeRequired,

    #[error("behavior is signaling: worst violation {0}")]
    Signaling(String),

    #[error("size guard exceeded: {0}")]
    BudgetExceeded(String),

    #[error("linear program error: {0}")]
    Lp(String),

    #[error("SDP solver failed: {0}")]
    Sdp(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("certification failed: uncovered subsets {0:?}")]
    CertificationFailed(Vec<Vec<usize>>),

    #[error("optimizer failed to reach {target}, best value {best}")]
    OptimizerStalled { target: f64, best: f64 },

    #[error("contradiction during stabilizer propagation: {0}")]
    PropagationContradiction(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
