use alloc::string::String;

use crate::ode::IntegratorStats;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("spin count must be at least 1 (got {0})")]
    InvalidSpinCount(usize),

    #[error("shape mismatch: expected {expected}x{expected}, got {rows}x{cols}")]
    ShapeMismatch {
        expected: usize,
        rows: usize,
        cols: usize,
    },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid quantum state: {0}")]
    InvalidState(String),

    #[error("step size underflow at t = {t} (h = {step})")]
    StepUnderflow {
        t: f64,
        step: f64,
        stats: IntegratorStats,
    },

    #[error("non-finite derivative at t = {t}")]
    NonFiniteDerivative { t: f64, stats: IntegratorStats },

    #[error("steady state is not unique: generator null space has dimension >= {nullity}")]
    DegenerateSteadyState { nullity: usize },

    #[error("steady state search did not converge (residual {residual:e} after t = {t})")]
    SteadyStateNotConverged { t: f64, residual: f64 },

    #[error("Fock cutoff {cutoff} too small: top-level population {top_population:e}")]
    CutoffViolation { cutoff: usize, top_population: f64 },
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
