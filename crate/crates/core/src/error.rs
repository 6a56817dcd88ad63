use thiserror::Error;

/// Errors shared by every solver in the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied argument violates a documented precondition.
    #[error("invalid argument `{name}`: {reason}")]
    InvalidArgument { name: &'static str, reason: String },

    /// Two fields (or a field and an operator) live on different grids.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// An iterative solver ran out of iterations without meeting its tolerance.
    #[error("{solver} did not converge after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence {
        solver: &'static str,
        iterations: usize,
        residual: f64,
    },

    /// A time step violates a stability or positivity bound.
    #[error("time step {dt:.3e} violates {constraint}; suggested dt <= {suggested:.3e}")]
    TimeStep {
        dt: f64,
        constraint: &'static str,
        suggested: f64,
    },

    /// A solver reached a state it cannot recover from.
    #[error("{0}")]
    SolverFailure(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidArgument {
            name,
            reason: reason.into(),
        }
    }
}
