use std::fmt;

/// Failure of a CLI command, carrying the process exit code it maps to.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config file or parameter values (exit 2).
    Usage(String),
    /// A quadrature or fit did not reach its tolerance (exit 3).
    NonConvergence(String),
    /// A computed result disagreed with its oracle (exit 4).
    OracleGate(String),
    /// I/O and anything else (exit 1).
    Other(anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::NonConvergence(_) => 3,
            CliError::OracleGate(_) => 4,
            CliError::Other(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::NonConvergence(m) => write!(f, "not converged: {m}"),
            CliError::OracleGate(m) => write!(f, "oracle gate failed: {m}"),
            CliError::Other(e) => write!(f, "{e:#}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<gpsl_core::Error> for CliError {
    fn from(e: gpsl_core::Error) -> Self {
        use gpsl_core::Error as E;
        match e {
            E::Domain(_) | E::Validity(_) | E::Config(_) => CliError::Usage(e.to_string()),
            E::Overflow(_) | E::BadIntegrand { .. } | E::TrajectoryAbort { .. } => CliError::NonConvergence(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Other(e.into())
    }
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Other(e)
    }
}

pub type CliResult<T> = Result<T, CliError>;
