//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by precoding, estimation and training operations.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown constellation `{0}` (expected bpsk, qpsk or qam16)")]
    UnknownConstellation(String),

    #[error("non-finite values in {0}")]
    NonFinite(&'static str),

    #[error("channel matrix is zero; no precoder can be derived")]
    ZeroChannel,

    #[error("all channel gains are zero; nothing to water-fill")]
    AllGainsZero,

    #[error("precoder matrix is zero; cannot rescale to full power")]
    ZeroPrecoder,

    #[error("precoder power {power:.6} exceeds the trace budget {budget}")]
    PowerBudgetExceeded { power: f64, budget: f64 },

    #[error("{symbols} symbol vectors exceed the enumeration guard of {limit}")]
    AlphabetTooLarge { symbols: u128, limit: u64 },

    #[error("at least one noise sample is required")]
    NoNoiseSamples,

    #[error("dimension mismatch in {0}")]
    DimensionMismatch(&'static str),

    #[error("expected vector of length {expected}, got {got}")]
    BadVectorLength { expected: usize, got: usize },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("invalid configuration: {0}")]
    InvalidConfig(&'static str),

    #[error("model file format: {0}")]
    ModelFormat(String),

    #[error("dataset file format: {0}")]
    DatasetFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
