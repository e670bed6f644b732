use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Inputs outside the documented domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("parse error: {0}")]
    Parse(String),

    /// A pivot minor vanished where a nonzero value is required.
    #[error("singular leading minor at order {0}")]
    SingularMinor(usize),

    /// Series, quadrature or root finding did not meet its tolerance.
    #[error("did not converge: {0}")]
    NonConvergence(String),

    /// The extremal polynomial family is larger than the configured cap.
    #[error("extremal polynomial family has {count} members, above the cap of {cap}")]
    EnumerationCap { count: u128, cap: u128 },

    /// The two feasibility routes returned different answers.
    #[error("dual certificate and primal witness disagree: {0}")]
    Inconsistent(String),

    #[error("no solution: {0}")]
    NoSolution(String),

    #[error("rejection envelope failure: acceptance rate {0:.3e}")]
    EnvelopeFailure(f64),

    /// Monte Carlo standard error too large to decide.
    #[error("Monte Carlo estimate inconclusive: {0}")]
    InconclusiveMc(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
