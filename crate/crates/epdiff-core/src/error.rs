//! Error types shared across the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter violates its documented range (e.g. negative Sobolev index).
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Two values live on different grids or have incompatible component counts.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// A symbol or operator breaks the reality condition a(x,-k) = conj a(x,k).
    #[error("reality condition violated: {0}")]
    RealityViolation(String),

    /// det(id + df) is not strictly positive at every collocation point.
    #[error("jacobian determinant not positive (min = {min:.6e})")]
    JacobianNotPositive { min: f64 },

    /// Diffeomorphism inversion did not reach the requested tolerance.
    #[error("diffeomorphism inversion stalled: residual {residual:.3e} after {iterations} iterations")]
    InversionFailed { residual: f64, iterations: usize },

    /// A linear solve hit a (numerically) singular truncated operator.
    #[error("singular operator on the truncated band (smallest singular value ~ {min_singular:.3e})")]
    SingularOperator { min_singular: f64 },

    /// An elliptic solve finished but the residual is above contract.
    #[error("solve residual {residual:.3e} exceeds tolerance {tol:.1e}")]
    SolveResidual { residual: f64, tol: f64 },

    /// Time integration tripped the growth/CFL guard. A report, not a proof.
    #[error("blow-up suspected at t = {time:.6}: {reason}")]
    BlowUpSuspected {
        time: f64,
        reason: String,
        /// Pairs (t, H^q norm) recorded up to the stop.
        norm_history: Vec<(f64, f64)>,
    },

    /// A configured recursion/size bound was exceeded.
    #[error("bound exceeded: {0}")]
    BoundExceeded(String),

    /// Optimizer made no progress before the iteration budget ran out.
    #[error("no descent progress after {iterations} iterations (best residual {residual:.3e})")]
    NoProgress { iterations: usize, residual: f64 },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// A structured text file (field snapshot, symbol, config) failed to parse.
    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// True when the failure is a numerical event rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::JacobianNotPositive { .. }
                | Error::InversionFailed { .. }
                | Error::SingularOperator { .. }
                | Error::SolveResidual { .. }
                | Error::BlowUpSuspected { .. }
                | Error::NoProgress { .. }
        )
    }
}
