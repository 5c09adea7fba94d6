//! Crate-wide error type.
//!
//! Errors split into two families: *validation* errors (malformed inputs,
//! incompatible grids, violated stability bounds) and *numerical* failures
//! (blow-up, non-convergent quadrature, indefinite covariance). The split is
//! what front ends map to distinct exit codes.

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    /// A parameter or input fails its precondition.
    #[error("invalid {what}: {why}")]
    InvalidInput { what: String, why: String },

    /// Explicit scheme asked to run an unstable step size.
    #[error(
        "CFL condition violated: 2*alpha*dt/dx^2 = {ratio:.6} > 1 \
         (largest stable dt = {max_dt:.6e})"
    )]
    CflViolation { ratio: f64, max_dt: f64 },

    /// Covariance factorization failed even after the jitter ladder.
    #[error(
        "covariance is not positive semidefinite: pivot {pivot:.6e} at index {index} \
         after jitter {jitter:.1e}; smallest-eigenvalue estimate {eig_min:.6e}"
    )]
    NotPositiveSemidefinite {
        index: usize,
        pivot: f64,
        jitter: f64,
        eig_min: f64,
    },

    /// Adaptive quadrature ran out of subdivisions before the tolerance.
    #[error("quadrature did not converge: achieved {achieved:.3e}, requested {requested:.3e}")]
    QuadratureNonConvergence { achieved: f64, requested: f64 },

    /// A simulated field stopped being finite.
    #[error("solution blew up: non-finite value at step {step} (t = {time:.6e})")]
    BlowUp { step: u64, time: f64 },

    /// An estimator was handed input it cannot produce a finite answer from.
    #[error("degenerate estimator input: {why}")]
    Degenerate { why: String },
}

impl Error {
    pub fn invalid(what: impl Into<String>, why: impl Into<String>) -> Self {
        Error::InvalidInput {
            what: what.into(),
            why: why.into(),
        }
    }

    /// True for errors a front end should report as bad input (exit code 2)
    /// rather than as a numerical failure (exit code 3).
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidInput { .. } | Error::CflViolation { .. } | Error::Degenerate { .. }
        )
    }
}
