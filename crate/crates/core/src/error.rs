use thiserror::Error;

use crate::subspaces::Family;

#[derive(Debug, Error)]
pub enum Error {
    #[error("size error: {0}")]
    Size(String),

    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("distribution does not normalize: total mass {total} (deviation above 1e-9)")]
    Normalization { total: f64 },

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid lambda decomposition: {0}")]
    InvalidLambda(String),

    #[error("no closed-form dimension for family {0:?}; use the rank oracle")]
    UnsupportedFamily(Family),

    #[error("label out of range: {0}")]
    Label(String),

    #[error("support mismatch: fitted probability is 0 for observed permutation {0}")]
    SupportMismatch(String),

    #[error("invalid model parameters: {0}")]
    InvalidParameters(String),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("numerical inconsistency: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by the caller's input rather than by a defect.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Numerical(_) | Error::Io(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
