use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid Fock dimension {0}: at least 2 levels are required")]
    InvalidDimension(usize),

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("truncation infeasible: {what} needs about {required} levels but dim = {dim}")]
    TruncationInfeasible {
        what: String,
        required: usize,
        dim: usize,
    },

    #[error("tail mass {mass:.3e} above the last {window} levels of a dim-{dim} space exceeds 1e-10 at t = {t}")]
    TailMass {
        mass: f64,
        window: usize,
        dim: usize,
        t: f64,
    },

    #[error("state lost positivity at t = {t} (Cholesky of rho + 1e-8 I failed)")]
    Positivity { t: f64 },

    #[error("integration diverged (non-finite state) at t = {t}")]
    Divergence { t: f64 },

    #[error("invalid bath: {0}")]
    InvalidBath(String),

    #[error("no steady state: {0}")]
    NoSteadyState(String),

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("invalid Otto cycle: {0}")]
    InvalidCycle(String),

    #[error("time {t} is outside the schedule [0, {end}]")]
    TimeOutOfRange { t: f64, end: f64 },

    #[error("cavity length became non-positive ({length}) at t = {t}")]
    NonPositiveLength { length: f64, t: f64 },

    #[error("invalid engine configuration: {0}")]
    InvalidConfig(String),

    #[error("quadrature did not reach tolerance {tol:e}: last step-halving difference {diff:e}")]
    Quadrature { tol: f64, diff: f64 },

    #[error("coarse grid is not unimodal on the bracket: {grid:?}")]
    AmbiguousBracket { grid: Vec<(f64, f64)> },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    /// Errors raised because the requested physics does not fit the numerical
    /// model (truncation, positivity, divergence).
    pub fn is_infeasibility(&self) -> bool {
        matches!(
            self,
            Error::TruncationInfeasible { .. }
                | Error::TailMass { .. }
                | Error::Positivity { .. }
                | Error::Divergence { .. }
                | Error::NonPositiveLength { .. }
        )
    }

    /// Errors raised by iterative procedures that did not converge.
    pub fn is_convergence(&self) -> bool {
        matches!(
            self,
            Error::Quadrature { .. } | Error::AmbiguousBracket { .. } | Error::NoSteadyState(_)
        )
    }
}
