//! Error type shared by all modules.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    Dimension {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid parameter {name} = {value}: requires {requirement}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        requirement: &'static str,
    },

    #[error("matrix not Hermitian within tolerance: anti-Hermitian residue {residue:.3e}")]
    NotHermitian { residue: f64 },

    #[error("matrix not symmetric within tolerance: antisymmetric residue {residue:.3e}")]
    NotSymmetric { residue: f64 },

    #[error("complete positivity violated: requires lambda^2 <= 1, got lambda = {lambda}")]
    CompletePositivity { lambda: f64 },

    #[error("ODE integration diverged at step {step} (t = {time:.6e}): non-finite values")]
    Divergence { step: usize, time: f64 },

    #[error("fluctuation basis not dynamically closed: out-of-span residual {residual:.3e}")]
    SpanClosure { residual: f64 },

    #[error("Fock truncation too coarse: tail mass {tail_mass:.3e} exceeds {limit:.1e} (raise n_max)")]
    Truncation { tail_mass: f64, limit: f64 },

    #[error("internal consistency failure: {0}")]
    Consistency(String),

    #[error("no convergence: {0}")]
    Convergence(String),

    #[error("root bracketing failed: {0}")]
    Bracket(String),

    #[error("sampling grid cannot resolve the requested feature: {0}")]
    Resolution(String),
}
