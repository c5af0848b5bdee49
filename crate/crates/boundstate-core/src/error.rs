use thiserror::Error;

/// Errors produced by the solver library.
#[derive(Debug, Error)]
pub enum CoreError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("field is in the wrong space: expected {expected}, got {actual}")]
    SpaceMismatch {
        expected: &'static str,
        actual: &'static str,
    },

    #[error("kernel certification failed: achieved {achieved:.3e}, requested {requested:.3e} ({terms} terms)")]
    Certification {
        achieved: f64,
        requested: f64,
        terms: usize,
    },

    #[error("power iteration breakdown: operator image has norm {0:.3e}; restart with a perturbed guess")]
    Breakdown(f64),

    #[error("state is not converged (residual {0:.3e}); run the power iteration first")]
    NotConverged(f64),

    #[error("no bound state reachable on this branch: {0}")]
    NoBoundState(String),

    #[error("iteration limit reached after {iters} steps (residual {residual:.3e})")]
    MaxIterations { iters: usize, residual: f64 },

    #[error("quadrature did not converge: error estimate {0:.3e}")]
    Quadrature(f64),

    #[error("radial oracle grid too coarse: eigenvalue drift {0:.3e} between refinements")]
    OracleDrift(f64),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, CoreError>;
