use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("time {t} is outside the drive domain [{start}, {end}]")]
    OutsideDriveDomain { t: f64, start: f64, end: f64 },

    #[error("horizon mismatch: query has tau = {query}, drive integrals were computed for tau = {integrals}")]
    HorizonMismatch { query: f64, integrals: f64 },

    #[error("step size underflow at t = {t}: tolerance {tol} unreachable")]
    StepUnderflow { t: f64, tol: f64 },

    #[error("structural identity violated: |2 Re h - |g|^2| = {defect} exceeds {bound}")]
    IdentityViolated { defect: f64, bound: f64 },

    #[error("grid too coarse: quadrature error estimate {estimate:e} exceeds tolerance {tol:e}")]
    GridTooCoarse { estimate: f64, tol: f64 },

    #[error("Fock truncation too small: tail mass {tail:e} exceeds {tol:e} at dim = {dim}")]
    TruncationSaturated { tail: f64, tol: f64, dim: usize },

    #[error("norm drift {drift:e} exceeds {tol:e}; time step too large")]
    NormDrift { drift: f64, tol: f64 },

    #[error("finite-difference step {fd_step:e} is dominated by cancellation")]
    CancellationDominated { fd_step: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
