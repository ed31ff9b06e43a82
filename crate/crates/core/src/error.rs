use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("block index {index} out of range for {blocks} blocks")]
    BlockIndex { index: usize, blocks: usize },

    #[error("invalid time grid: {0}")]
    Grid(String),

    #[error("invalid scenario: {0}")]
    Scenario(String),

    #[error("unsupported norm exponent {0}; expected 1, 2 or infinity")]
    UnsupportedNorm(f64),

    #[error("uncertainty kind mismatch: expected {expected}, found {found}")]
    KindMismatch { expected: &'static str, found: &'static str },

    #[error("agents cannot be paired: {0}")]
    Pairing(String),

    #[error("input samples rejected: {0}")]
    Ingestion(String),

    #[error("no witness available: solver status is {0}")]
    WitnessUnavailable(&'static str),

    #[error("internal consistency check failed: {0}")]
    Consistency(String),

    #[error("projection onto a block of dimension {0} is not supported")]
    UnsupportedProjection(usize),
}
