use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),

    #[error("matrix is singular: {0}")]
    Singular(&'static str),

    #[error("Riccati iteration did not converge after {iterations} iterations ({reason})")]
    NonConvergent { iterations: usize, reason: String },

    #[error("ill-conditioned gain solve: {0}")]
    IllConditioned(String),

    #[error("eigenvalue iteration failed to converge")]
    EigenFailure,

    #[error("matrix is not Schur stable (spectral radius {0})")]
    Unstable(f64),

    #[error("decay envelope scan did not settle within {0} powers")]
    EnvelopeScan(usize),

    #[error("steady-state program is not strictly convex (λ_min = {0:e})")]
    SingularProgram(f64),

    #[error("no stable step size found on the search grid")]
    NoStableStep,

    #[error("step size {alpha} violates Assumption 3 (ρ(Ã) = {radius})")]
    UnstableStep { alpha: f64, radius: f64 },

    #[error("{0}")]
    AssumptionViolated(String),

    #[error("bad parameters: {0}")]
    BadParams(String),
}

impl Error {
    /// True for errors that signal an ill-posed problem rather than a
    /// numerical or input failure.
    pub fn is_assumption_violation(&self) -> bool {
        matches!(
            self,
            Error::AssumptionViolated(_) | Error::NonConvergent { .. } | Error::SingularProgram(_)
        )
    }

    pub fn is_instability(&self) -> bool {
        matches!(
            self,
            Error::Unstable(_) | Error::UnstableStep { .. } | Error::NoStableStep
        )
    }
}
