//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Innovation covariance could not be factorized. Usually means a
    /// zero-noise configuration was combined with a degenerate belief.
    #[error("singular innovation covariance for landmark {landmark}: {detail}")]
    SingularInnovation { landmark: usize, detail: String },

    #[error("unknown landmark id {0}")]
    UnknownLandmark(usize),

    #[error("belief has no pose slot")]
    NoPose,

    /// Every hypothesis assigned zero likelihood to the evidence.
    #[error("total hypothesis inconsistency")]
    TotalInconsistency,

    #[error("empty candidate set")]
    EmptyCandidates,

    #[error("all importance weights are zero")]
    ZeroWeights,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("unknown scenario '{0}'")]
    UnknownScenario(String),

    #[error("enumeration too large: {leaves} leaves exceeds limit {limit}")]
    EnumerationTooLarge { leaves: u64, limit: u64 },

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
