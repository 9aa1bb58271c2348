//! Error type shared across the library.

use thiserror::Error;

/// Errors produced by instance validation, evaluation engines, offline
/// optimisation, advice handling, and serialization.
#[derive(Error, Debug)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid rational literal `{0}`")]
    ParseRational(String),

    #[error("instance admits no perfect matching")]
    NoPerfectMatching,

    #[error("matrix is not bistochastic: {0}")]
    NotBistochastic(String),

    #[error("invalid advice tape: {0}")]
    InvalidTape(String),

    #[error("branch cap exceeded: needed more than {cap} simultaneous branches")]
    BranchCapExceeded { cap: usize },

    #[error("state cap exceeded: needed more than {cap} simultaneous states")]
    StateCapExceeded { cap: usize },

    #[error("size cap exceeded: {0}")]
    SizeCapExceeded(String),

    #[error("operation unsupported: {0}")]
    Unsupported(String),

    #[error("serialization error: {0}")]
    Serde(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
