//! Primitive market/model parameters and their validation.

use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};

/// Primitive constants of the market impact model.
///
/// Units: `mu`, `delta`, `gamma` are rates (1/time); `sigma` is a volatility
/// (1/√time); `lambda` is the permanent impact per share (1/share);
/// `cost_sell` and `cost_buy` are proportional transaction costs
/// (price/share).
///
/// Standing assumptions (enforced by [`validate_params`]):
///
/// * `delta > mu` — rules out arbitrage from holding forever;
/// * `sigma != 0` — only σ² enters the formulas, we canonicalise to σ > 0;
/// * `lambda > 0`, `gamma > 0`, `delta > 0`, `cost_sell > 0`, `cost_buy > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Drift rate μ of the unaffected price.
    pub mu: f64,
    /// Volatility σ of the unaffected price.
    pub sigma: f64,
    /// Discount rate δ.
    pub delta: f64,
    /// Permanent impact λ per share: a trade of ν shares multiplies the
    /// price by e^{∓λν}.
    pub lambda: f64,
    /// Intensity γ of the Poisson trading clock.
    pub gamma: f64,
    /// Proportional cost C_s per share sold.
    pub cost_sell: f64,
    /// Proportional cost C_b per share bought.
    pub cost_buy: f64,
}

impl ModelParams {
    /// A representative liquid-market parameter set used throughout the
    /// examples and tests: μ = 0.05, σ = 0.3, δ = 0.1, λ = 0.01, γ = 2,
    /// C_s = C_b = 0.5.
    pub fn default_market() -> Self {
        Self {
            mu: 0.05,
            sigma: 0.3,
            delta: 0.1,
            lambda: 0.01,
            gamma: 2.0,
            cost_sell: 0.5,
            cost_buy: 0.5,
        }
    }

    /// η := δ − μ, the effective discount rate of the drifting price.
    #[inline]
    pub fn eta(&self) -> f64 {
        self.delta - self.mu
    }

    /// b := σ²/2 − μ, the drift coefficient of the characteristic quadratics.
    #[inline]
    pub fn b(&self) -> f64 {
        0.5 * self.sigma * self.sigma - self.mu
    }

    /// μ − σ²/2, the almost-sure growth rate of ln X⁰.
    ///
    /// The pure barrier strategy liquidates the whole position with
    /// probability one iff this is ≥ 0; below zero it must be wrapped in a
    /// truncation deadline to stay admissible.
    #[inline]
    pub fn log_drift(&self) -> f64 {
        self.mu - 0.5 * self.sigma * self.sigma
    }

    /// Whether the pure barrier strategy is admissible (μ − σ²/2 ≥ 0).
    #[inline]
    pub fn is_optimal_regime(&self) -> bool {
        self.log_drift() >= 0.0
    }

    /// Validates and returns `self`, for call chaining.
    pub fn validated(self) -> Result<Self> {
        let report = validate_params(&self);
        if report.is_valid() {
            Ok(self)
        } else {
            Err(ModelError::InvalidParams(report))
        }
    }
}

/// A single violated constraint, with the offending values.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstraintViolation {
    /// Short name of the violated constraint, e.g. `"delta > mu"`.
    pub constraint: &'static str,
    /// Human-readable detail including the offending values.
    pub detail: String,
}

/// Outcome of [`validate_params`]: empty means every constraint holds.
///
/// Validation is total — it never panics or errors, it only reports.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    /// All violated constraints; empty for valid parameters.
    pub violations: Vec<ConstraintViolation>,
}

impl ValidationReport {
    /// True when no constraint is violated.
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.is_valid() {
            return write!(f, "all constraints hold");
        }
        let msgs: Vec<String> = self
            .violations
            .iter()
            .map(|v| format!("{} violated ({})", v.constraint, v.detail))
            .collect();
        write!(f, "{}", msgs.join("; "))
    }
}

/// Checks every standing assumption on the primitive parameters and returns
/// the list of violations (empty on success).
pub fn validate_params(p: &ModelParams) -> ValidationReport {
    let mut violations = Vec::new();
    let mut check = |ok: bool, constraint: &'static str, detail: String| {
        if !ok {
            violations.push(ConstraintViolation { constraint, detail });
        }
    };

    let all_finite = [
        p.mu, p.sigma, p.delta, p.lambda, p.gamma, p.cost_sell, p.cost_buy,
    ]
    .iter()
    .all(|v| v.is_finite());
    check(all_finite, "parameters finite", format!("{p:?}"));
    if !all_finite {
        return ValidationReport { violations };
    }

    check(
        p.delta > p.mu,
        "delta > mu",
        format!("delta = {}, mu = {}", p.delta, p.mu),
    );
    check(p.delta > 0.0, "delta > 0", format!("delta = {}", p.delta));
    check(p.sigma != 0.0, "sigma != 0", format!("sigma = {}", p.sigma));
    check(
        p.lambda > 0.0,
        "lambda > 0",
        format!("lambda = {}", p.lambda),
    );
    check(p.gamma > 0.0, "gamma > 0", format!("gamma = {}", p.gamma));
    check(
        p.cost_sell > 0.0,
        "cost_sell > 0",
        format!("cost_sell = {}", p.cost_sell),
    );
    check(
        p.cost_buy > 0.0,
        "cost_buy > 0",
        format!("cost_buy = {}", p.cost_buy),
    );

    ValidationReport { violations }
}
