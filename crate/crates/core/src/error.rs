use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("validity bound violated: {0}")]
    Validity(String),
    #[error("overflow: {0}")]
    Overflow(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("integrand produced {bad} non-finite values out of {total} evaluations")]
    BadIntegrand { bad: u64, total: u64 },
    #[error("{aborted} of {total} trajectories aborted: {reason}")]
    TrajectoryAbort {
        aborted: usize,
        total: usize,
        reason: String,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
