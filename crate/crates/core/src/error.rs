use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("upstream cell ({i}, {j}) is not a convex quadrilateral; reduce the time step")]
    NonConvexUpstreamCell { i: usize, j: usize },

    #[error("conjugate gradient did not converge after {iterations} iterations (relative residual {residual:e})")]
    SolverNonConvergence { iterations: usize, residual: f64 },

    #[error("non-finite value in the solution after step {step}")]
    NonFinite { step: usize },

    #[error("spectral solver requires a periodic grid")]
    NonPeriodicGrid,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("moment computation failed: {0}")]
    Moments(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
