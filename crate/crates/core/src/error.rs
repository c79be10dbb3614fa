use thiserror::Error;

use crate::state::DensityMatrix;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("kind mismatch: cannot combine a pure state with a density matrix")]
    KindMismatch,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("unknown qubit label `{0}`")]
    UnknownLabel(String),

    #[error("duplicate qubit label `{0}`")]
    DuplicateLabel(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("parameter out of range: {0}")]
    OutOfRange(String),

    #[error("photon already in a loss sink cannot be propagated")]
    PhotonInSink,

    #[error("post-selection success probability {0:e} is too small")]
    NoSuccess(f64),

    #[error("tomography: {0}")]
    Tomography(String),

    /// The fit stopped at the iteration cap; `best` is the last accepted iterate.
    #[error("maximum-likelihood fit did not converge within {iterations} iterations")]
    NotConverged {
        iterations: usize,
        best: Box<DensityMatrix>,
    },

    #[error("bootstrap: {skipped} of {total} resamples failed")]
    Bootstrap { skipped: usize, total: usize },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Configuration problems map to exit status 2, everything else to 3.
    pub fn is_config_error(&self) -> bool {
        matches!(self, Error::Config(_))
    }
}
