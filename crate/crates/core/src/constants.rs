//! Derived model constants: characteristic roots, the optimal barrier, and
//! the closed-form value-function coefficients.
//!
//! Everything here follows from the primitive parameters by explicit
//! formulas.  The two characteristic quadratics
//!
//! ```text
//! ½σ²l² − b·l − δ       = 0   (b := σ²/2 − μ)
//! ½σ²l² − b·l − (δ+γ)   = 0
//! ```
//!
//! have one positive and one negative root each; `n > 1` denotes the
//! positive root of the first and `m < 0` the negative root of the second.
//! The optimal selling barrier is `F = a·C_s` with the barrier multiple `a`
//! given by a ratio of root/rate combinations, and `A`, `C` are the matching
//! coefficients of the middle branch of the value function.

use serde::Serialize;

use crate::error::{ModelError, Result};
use crate::params::{validate_params, ModelParams};

/// Positive root `n` of `½σ²l² − b·l − δ = 0`, where `b = σ²/2 − μ`.
///
/// Under the standing assumption δ > μ the quadratic is negative at `l = 1`,
/// so `n > 1` always.
pub fn positive_root_n(p: &ModelParams) -> f64 {
    characteristic_roots(p.sigma, p.b(), p.delta).1
}

/// Negative root `m` of `½σ²l² − b·l − (δ+γ) = 0`.
pub fn negative_root_m(p: &ModelParams) -> f64 {
    characteristic_roots(p.sigma, p.b(), p.delta + p.gamma).0
}

/// Both roots of `½σ²l² − b·l − rate = 0`, returned as `(negative, positive)`.
///
/// Uses the numerically stable quadratic recipe: the root with the larger
/// magnitude is computed from the discriminant without cancellation, the
/// other from the product of roots `−2·rate/σ²`.
fn characteristic_roots(sigma: f64, b: f64, rate: f64) -> (f64, f64) {
    let sigma2 = sigma * sigma;
    let disc_sqrt = (b * b + 2.0 * sigma2 * rate).sqrt();
    let product = -2.0 * rate / sigma2;
    if b >= 0.0 {
        let pos = (b + disc_sqrt) / sigma2;
        (product / pos, pos)
    } else {
        let neg = (b - disc_sqrt) / sigma2;
        (neg, product / neg)
    }
}

/// Barrier multiple `a ∈ (1, n/(n−1))`: the optimal barrier is `F = a·C_s`.
///
/// ```text
///      (δ − m(δ/n + γb/(δ+γ))) / (δ+γ)
/// a = ───────────────────────────────────────────
///      η/(η+γ) − (m/(δ+γ))(δ/n − γμ/(η+γ))
/// ```
///
/// with η = δ − μ.  Errors with [`ModelError::DegenerateDenominator`] when
/// the denominator underflows to zero (it is strictly positive for every
/// admissible parameter set).
pub fn a_gamma(p: &ModelParams) -> Result<f64> {
    let n = positive_root_n(p);
    let m = negative_root_m(p);
    a_gamma_from_roots(p, n, m)
}

fn a_gamma_from_roots(p: &ModelParams, n: f64, m: f64) -> Result<f64> {
    let dg = p.delta + p.gamma;
    let eta = p.eta();
    let numerator = (p.delta - m * (p.delta / n + p.gamma * p.b() / dg)) / dg;
    let denominator = eta / (eta + p.gamma) - (m / dg) * (p.delta / n - p.gamma * p.mu / (eta + p.gamma));
    if denominator.abs() < f64::MIN_POSITIVE || !denominator.is_finite() {
        return Err(ModelError::DegenerateDenominator { denominator });
    }
    Ok(numerator / denominator)
}

/// All derived constants of the model, computed once by
/// [`derive_constants`] and threaded through the value function, the
/// simulator, and the numerical verifiers.
///
/// Constructed only through [`derive_constants`] so that the fields are
/// always mutually consistent with the embedded parameters.
#[derive(Debug, Clone, Copy, Serialize)]
#[non_exhaustive]
pub struct DerivedConstants {
    /// The primitive parameters these constants were derived from.
    pub params: ModelParams,
    /// Positive characteristic root `n > 1` (rate δ).
    pub n: f64,
    /// Negative characteristic root `m < 0` (rate δ + γ).
    pub m: f64,
    /// Barrier multiple `a = F/C_s ∈ (1, n/(n−1))`.
    pub a: f64,
    /// Optimal selling barrier `F = a·C_s`: sell only when the price is at
    /// or above this level.
    pub barrier: f64,
    /// Infinite-intensity barrier `F_∞ = n·C_s/(n−1) > F`.
    pub barrier_limit: f64,
    /// Coefficient `A < 0` of the `x^m` term in the middle branch of the
    /// value function.
    pub coeff_a: f64,
    /// Additive constant `C` of the middle branch of the value function.
    pub coeff_c: f64,
    /// η = δ − μ.
    pub eta: f64,
    /// b = σ²/2 − μ.
    pub b: f64,
}

impl DerivedConstants {
    /// Price level `F·e^{λy}` above which the optimal sale at an arrival is
    /// the whole remaining inventory `y`.
    #[inline]
    pub fn full_liquidation_boundary(&self, inventory: f64) -> f64 {
        self.barrier * (self.params.lambda * inventory).exp()
    }
}

/// Computes every derived constant from the primitive parameters.
///
/// Validates the parameters first and refuses invalid sets, so holders of a
/// `DerivedConstants` can rely on all standing assumptions.
pub fn derive_constants(p: &ModelParams) -> Result<DerivedConstants> {
    let report = validate_params(p);
    if !report.is_valid() {
        return Err(ModelError::InvalidParams(report));
    }

    let n = positive_root_n(p);
    let m = negative_root_m(p);
    let a = a_gamma_from_roots(p, n, m)?;
    let barrier = a * p.cost_sell;
    let barrier_limit = n * p.cost_sell / (n - 1.0);

    let dg = p.delta + p.gamma;
    let eta = p.eta();
    let b = p.b();
    let lam = p.lambda;
    let cs = p.cost_sell;

    // Coefficient of the x^m term: matches value and slope across the
    // boundary between the middle and full-liquidation branches.
    let coeff_a = (barrier / (lam * dg)) * (p.delta / n - p.gamma * p.mu / (eta + p.gamma))
        - (cs / (lam * dg)) * (p.delta / n + p.gamma * b / dg);

    // Additive constant of the middle branch: matches the value across the
    // waiting boundary x = F.
    let coeff_c = p.gamma * (barrier - cs) / (lam * n * dg)
        + (p.gamma / (lam * dg)) * (b * cs / dg + cs * barrier.ln() - barrier);

    Ok(DerivedConstants {
        params: *p,
        n,
        m,
        a,
        barrier,
        barrier_limit,
        coeff_a,
        coeff_c,
        eta,
        b,
    })
}
