use thiserror::Error;

use crate::seqlang::SeqError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An input violated a documented precondition.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("matrix is not Hermitian (max |H - H^dagger| = {0:.3e})")]
    NonHermitian(f64),

    #[error("rate matrix steady state is not unique (null space dimension {0})")]
    DegenerateSteadyState(usize),

    #[error("objective is not finite at {0:?}")]
    NonFiniteObjective(Vec<f64>),

    #[error(transparent)]
    Sequence(#[from] SeqError),
}

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
