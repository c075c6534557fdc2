use thiserror::Error;

/// Errors surfaced by model construction, solvers and the simulation engine.
///
/// Out-of-domain cumulant values are deliberately *not* errors: `cgf` and the
/// conjugates return a `+inf` sentinel so that optimizer loops stay
/// branch-free. Errors are reserved for contract violations and for solver
/// failures that the caller must handle.
#[derive(Debug, Error)]
pub enum Error {
    /// Model parameters are inadmissible (log argument <= 0, bad shapes, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// `sigma` failed the symmetry or Cholesky check.
    #[error("sigma not positive definite")]
    SigmaNotPositiveDefinite,

    /// Argument outside its stated range (e.g. tail time outside [0, T]).
    #[error("range error: {0}")]
    Range(String),

    /// A required date (atom time, averaging date) is missing from the path grid.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// Feasible region of a solver is empty.
    #[error("no interior point: {0}")]
    NoInteriorPoint(String),

    /// Iterative solver did not converge within its iteration budget.
    #[error("maximum iterations exceeded: {0}")]
    MaxIterations(String),

    /// Shooting solver found no sign change for the first-integral constant.
    #[error("bracketing failure: {0}")]
    BracketingFailure(String),

    /// ODE trajectory left the CGF domain during integration.
    #[error("domain exit during integration: {0}")]
    DomainExit(String),

    /// Importance-sampling variance is zero with a nonzero estimate.
    #[error("degenerate variance: {0}")]
    DegenerateVariance(String),

    /// Malformed configuration or payoff/model mismatch.
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
