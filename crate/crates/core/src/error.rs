//! Error type shared across the crate.

use crate::params::ValidationReport;

/// Convenience alias used by every fallible operation in this crate.
pub type Result<T> = std::result::Result<T, ModelError>;

/// Errors surfaced by model construction, simulation, and the numerical
/// solvers.
#[derive(Debug, Clone, thiserror::Error)]
pub enum ModelError {
    /// The primitive parameters violate one or more standing assumptions.
    #[error("invalid model parameters: {0}")]
    InvalidParams(ValidationReport),

    /// A quantity that must be strictly positive was not.
    #[error("{name} must be strictly positive, got {value}")]
    NotPositive { name: &'static str, value: f64 },

    /// A sale/buy quantity fell outside the admissible interval.
    #[error("trade quantity {quantity} outside admissible range [0, {max}]")]
    QuantityOutOfRange { quantity: f64, max: f64 },

    /// A per-jump decision sequence broke an admissibility rule.
    #[error("malformed decision sequence at jump {index}: {reason}")]
    MalformedSequence { index: usize, reason: String },

    /// The pure barrier strategy does not liquidate the position when
    /// μ − σ²/2 < 0; callers must wrap it with a truncation deadline.
    #[error(
        "mu - sigma^2/2 = {drift} < 0: the pure barrier strategy is not admissible; \
         use a truncated policy"
    )]
    InadmissibleRegime { drift: f64 },

    /// The a_γ denominator was not strictly positive. This cannot happen for
    /// valid parameters and indicates an implementation bug upstream.
    #[error("a_gamma denominator not positive ({denominator}); implementation bug")]
    DegenerateDenominator { denominator: f64 },

    /// Policy iteration failed to reach the requested tolerance.
    #[error(
        "policy iteration did not converge after {iterations} iterations \
         (last sup-norm change {last_change:.3e}); residual history: {history:?}"
    )]
    NoConvergence {
        iterations: usize,
        last_change: f64,
        history: Vec<f64>,
    },

    /// A numerical input (grid spec, path count, …) was unusable.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}
