use crate::linalg::ComplexVector;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// An iterative solver ran out of iterations. The last iterate is kept so
    /// callers can still use it.
    #[error("no convergence after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence {
        iterations: usize,
        residual: f64,
        last: ComplexVector,
    },

    #[error("degenerate retraction step at entry {index}")]
    DegenerateStep { index: usize },

    #[error("rank deficient: {0}")]
    RankDeficient(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("property violation: {0}")]
    PropertyViolation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub(crate) fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidInput(msg()))
    }
}
