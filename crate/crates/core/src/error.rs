use thiserror::Error;

/// Failure raised while constructing grids or coefficient fields, assembling,
/// or solving.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("point ({x}, {y}) lies outside the domain")]
    OutsideDomain { x: f64, y: f64 },

    #[error("inadmissible coefficients: {0}")]
    Inadmissible(String),

    #[error("no rotation places the coefficient values in a common open half-plane (angular spread {spread:.6} rad)")]
    RotationInfeasible { spread: f64 },

    #[error("invalid boundary data: {0}")]
    InvalidBoundary(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(transparent)]
    Solver(#[from] SolverError),

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: SolverError,
    },

    #[error("problem too large for {what}: {size} > {limit}")]
    SizeLimit {
        what: &'static str,
        size: usize,
        limit: usize,
    },

    #[error("{0}")]
    Study(String),
}

/// Failure inside a linear solver.
#[derive(Debug, Clone, Error)]
pub enum SolverError {
    #[error("no convergence after {iterations} iterations (relative residual {residual:.3e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("breakdown at iteration {iteration}: non-positive curvature {curvature:.3e}, operator is not SPD")]
    Breakdown { iteration: usize, curvature: f64 },

    #[error("incomplete Cholesky failed after {retries} diagonal shifts")]
    FactorizationFailed { retries: usize },

    #[error("matrix is not positive definite (pivot {pivot} = {value:.3e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("singular matrix at pivot {0}")]
    Singular(usize),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
