//! Closed-form value function of the barrier strategy, its partial
//! derivatives, the differential/jump operators, and smooth-fit
//! diagnostics.
//!
//! With `F` the optimal barrier, `n > 1` and `m < 0` the characteristic
//! roots, and `A`, `C` the matching coefficients (see
//! [`crate::constants`]), the value function is, region by region:
//!
//! ```text
//! y = 0:              v = 0
//!
//! x < F:              v = (F − C_s)(1 − e^{−λny}) xⁿ / (λ n Fⁿ)
//!
//! F ≤ x < F·e^{λy}:   v = A (x/F)^m − (F − C_s) e^{−λny} xⁿ / (λ n Fⁿ)
//!                         + γx / (λ(η+γ)) − γ C_s ln x / (λ(δ+γ)) + C
//!
//! x ≥ F·e^{λy}:       v = A (1 − e^{−λmy}) (x/F)^m
//!                         + γ x (1 − e^{−λy}) / (λ(η+γ)) − γ C_s y / (δ+γ)
//! ```
//!
//! The terms `(1 − e^{−λmy})(x/F)^k` are evaluated as differences of
//! exponentials with provably non-positive exponents, so the expressions
//! stay finite even when `|m|` is in the tens of thousands (very frequent
//! trading opportunities) or `λ|m|y` is huge.
//!
//! The value solves the stationary Hamilton–Jacobi–Bellman equation
//!
//! ```text
//! L v(x, y) + γ · sup_{0 ≤ l ≤ y} G(x, y, l; v) = 0,
//! L f = ½σ²x² f_xx + μx f_x − δ f,
//! G(x, y, l; f) = f(x e^{−λl}, y − l) − f(x, y) + (1 − e^{−λl}) x / λ − C_s l,
//! ```
//!
//! where the supremum is attained at `l* = min(y, (ln x − ln F)⁺ / λ)`:
//! sell nothing below the barrier, otherwise sell just enough to push the
//! price back to `F` (or everything, if even that leaves the price at or
//! above `F`).

use serde::Serialize;

use crate::constants::DerivedConstants;
use crate::params::ModelParams;
use crate::state::{classify_region, MarketState, Region};

/// Price clamp bounds: evaluation saturates rather than overflowing when a
/// caller feeds denormal or astronomically large prices.
const PRICE_CLAMP: (f64, f64) = (1e-300, 1e300);

/// Value of a function together with its first derivatives and the second
/// price derivative at a point — everything the generators need.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Jet2 {
    /// Function value `f(x, y)`.
    pub value: f64,
    /// `∂f/∂x`.
    pub dx: f64,
    /// `∂f/∂y`.
    pub dy: f64,
    /// `∂²f/∂x²`.
    pub dxx: f64,
}

impl Jet2 {
    /// Bundles a value with its derivatives.
    #[inline]
    pub fn new(value: f64, dx: f64, dy: f64, dxx: f64) -> Self {
        Self { value, dx, dy, dxx }
    }

    const ZERO: Jet2 = Jet2 { value: 0.0, dx: 0.0, dy: 0.0, dxx: 0.0 };
}

/// `(1 − e^{−λmy}) · r^k` computed as `e^{k·ln r} − e^{k·ln r − λmy}`.
///
/// In the full-liquidation region `ln r ≥ λy`, and `k ≤ m < 0`, so both
/// exponents are ≤ 0 and neither exponential can overflow — unlike the
/// naive factored form, where `e^{−λmy}` alone explodes for large `|m|y`.
#[inline]
fn one_minus_exp_pow(k: f64, ln_r: f64, lam_m_y: f64) -> f64 {
    (k * ln_r).exp() - (k * ln_r - lam_m_y).exp()
}

/// Waiting branch `x < F` evaluated at `(x, y)` regardless of region.
fn jet_waiting(c: &DerivedConstants, x: f64, y: f64) -> Jet2 {
    let p = &c.params;
    let (f, n) = (c.barrier, c.n);
    let en_y = (-p.lambda * n * y).exp();
    // v = base · (x/F)ⁿ with base = F(F − C_s)(1 − e^{−λny}) / (λnFⁿ)·F⁻¹…
    // keep the classic grouping: c_w = (F − C_s)(1 − e^{−λny}) / (λnFⁿ).
    let c_w = (f - p.cost_sell) * (1.0 - en_y) / (p.lambda * n * f.powf(n));
    Jet2 {
        value: c_w * x.powf(n),
        dx: n * c_w * x.powf(n - 1.0),
        dy: (f - p.cost_sell) * en_y * (x / f).powf(n),
        dxx: n * (n - 1.0) * c_w * x.powf(n - 2.0),
    }
}

/// Middle branch `F ≤ x < F·e^{λy}` evaluated at `(x, y)` regardless of
/// region.
fn jet_intermediate(c: &DerivedConstants, x: f64, y: f64) -> Jet2 {
    let p = &c.params;
    let (f, n, m, a) = (c.barrier, c.n, c.m, c.coeff_a);
    let dg = p.delta + p.gamma;
    let eg = c.eta + p.gamma;
    let ln_r = (x / f).ln();
    let r_m = (m * ln_r).exp();
    // The xⁿ pieces of value/dx/dxx share one overflow-safe factor:
    // (F−C_s)/(λn) · e^{−λny} (x/F)ⁿ = (F−C_s)/(λn) · e^{n·ln r − λny};
    // in this region ln r ≤ λy, so the exponent is ≤ 0 for any y.
    let en_pow = (n * ln_r - p.lambda * n * y).exp();
    let xn_safe = (f - p.cost_sell) / (p.lambda * n) * en_pow;

    let value = a * r_m - xn_safe + p.gamma * x / (p.lambda * eg)
        - p.gamma * p.cost_sell * x.ln() / (p.lambda * dg)
        + c.coeff_c;
    let dx = a * m / f * ((m - 1.0) * ln_r).exp() - n * xn_safe / x + p.gamma / (p.lambda * eg)
        - p.gamma * p.cost_sell / (p.lambda * dg * x);
    let dy = (f - p.cost_sell) * en_pow;
    let dxx = a * m * (m - 1.0) / (f * f) * ((m - 2.0) * ln_r).exp()
        - n * (n - 1.0) * xn_safe / (x * x)
        + p.gamma * p.cost_sell / (p.lambda * dg * x * x);

    Jet2 { value, dx, dy, dxx }
}

/// Full-liquidation branch `x ≥ F·e^{λy}` evaluated at `(x, y)` regardless
/// of region.
fn jet_full(c: &DerivedConstants, x: f64, y: f64) -> Jet2 {
    let p = &c.params;
    let (f, m, a) = (c.barrier, c.m, c.coeff_a);
    let eg = c.eta + p.gamma;
    let dg = p.delta + p.gamma;
    let ln_r = (x / f).ln();
    let lam_m_y = p.lambda * m * y;
    let e_y = (-p.lambda * y).exp();

    let value = a * one_minus_exp_pow(m, ln_r, lam_m_y)
        + p.gamma * x * (1.0 - e_y) / (p.lambda * eg)
        - p.gamma * p.cost_sell * y / dg;
    let dx = a * m / f * one_minus_exp_pow(m - 1.0, ln_r, lam_m_y)
        + p.gamma * (1.0 - e_y) / (p.lambda * eg);
    // ∂/∂y of A(1 − e^{−λmy})r^m = Aλm e^{m·ln r − λmy}; the exponent is
    // m(ln r − λy) ≤ 0 here.
    let dy = a * p.lambda * m * (m * ln_r - lam_m_y).exp() + p.gamma * x * e_y / eg
        - p.gamma * p.cost_sell / dg;
    let dxx = a * m * (m - 1.0) / (f * f) * one_minus_exp_pow(m - 2.0, ln_r, lam_m_y);

    Jet2 { value, dx, dy, dxx }
}

/// Closed-form value function with all derivatives at one state.
///
/// Prices are clamped into `[1e-300, 1e300]` before evaluation; `y ≤ 0` is
/// the exhausted state with the zero jet (derivatives there are understood
/// as one-sided limits of the neighbouring branch).
pub fn value_jet(constants: &DerivedConstants, state: &MarketState) -> Jet2 {
    let x = state.price.clamp(PRICE_CLAMP.0, PRICE_CLAMP.1);
    let clamped = MarketState::new(x, state.inventory);
    match classify_region(&clamped, constants) {
        Region::Exhausted => Jet2::ZERO,
        Region::Waiting => jet_waiting(constants, x, clamped.inventory),
        Region::Intermediate => jet_intermediate(constants, x, clamped.inventory),
        Region::FullLiquidation => jet_full(constants, x, clamped.inventory),
    }
}

/// Expected discounted proceeds of the optimal strategy started at `state`.
pub fn value(constants: &DerivedConstants, state: &MarketState) -> f64 {
    value_jet(constants, state).value
}

/// `∂v/∂x` of the closed-form value.
pub fn value_dx(constants: &DerivedConstants, state: &MarketState) -> f64 {
    value_jet(constants, state).dx
}

/// `∂v/∂y` of the closed-form value.
pub fn value_dy(constants: &DerivedConstants, state: &MarketState) -> f64 {
    value_jet(constants, state).dy
}

/// `∂²v/∂x²` of the closed-form value.
pub fn value_dxx(constants: &DerivedConstants, state: &MarketState) -> f64 {
    value_jet(constants, state).dxx
}

/// Infinite-intensity limit of the value function (continuous trading): the
/// barrier becomes `F_∞ = n C_s/(n−1)` and the value simplifies to
///
/// ```text
/// x < F_∞:               (1 − e^{−λny}) xⁿ / (λ n² F_∞^{n−1})
/// F_∞ ≤ x < F_∞ e^{λy}:  F_∞/(λn²) · (1 − (x e^{−λy}/F_∞)ⁿ)
///                          + (x − F_∞)/λ − (C_s/λ) ln(x/F_∞)
/// x ≥ F_∞ e^{λy}:        x (1 − e^{−λy})/λ − C_s y
/// ```
pub fn value_limit(constants: &DerivedConstants, state: &MarketState) -> f64 {
    let p = &constants.params;
    let n = constants.n;
    let f = constants.barrier_limit;
    let x = state.price.clamp(PRICE_CLAMP.0, PRICE_CLAMP.1);
    let y = state.inventory;
    if y <= 0.0 {
        return 0.0;
    }
    let lam = p.lambda;
    if x < f {
        (1.0 - (-lam * n * y).exp()) * x.powf(n) / (lam * n * n * f.powf(n - 1.0))
    } else if x < f * (lam * y).exp() {
        // (x e^{−λy}/F_∞)ⁿ = e^{n(ln(x/F_∞) − λy)} with a non-positive
        // exponent throughout this region.
        let pow = (n * ((x / f).ln() - lam * y)).exp();
        f / (lam * n * n) * (1.0 - pow) + (x - f) / lam - p.cost_sell / lam * (x / f).ln()
    } else {
        x * (1.0 - (-lam * y).exp()) / lam - p.cost_sell * y
    }
}

/// Optimal sale at a trading opportunity: `l* = min(y, (ln x − ln F)⁺/λ)`.
///
/// Zero below the barrier; otherwise exactly the amount whose impact knocks
/// the price back to `F`, capped at the whole inventory.
pub fn optimal_sale_quantity(constants: &DerivedConstants, state: &MarketState) -> f64 {
    if state.inventory <= 0.0 {
        return 0.0;
    }
    let unconstrained = (state.price / constants.barrier).ln().max(0.0) / constants.params.lambda;
    unconstrained.min(state.inventory)
}

/// Diffusion generator `L f = ½σ²x² f_xx + μx f_x − δ f` applied to a jet.
pub fn generator_l(p: &ModelParams, x: f64, jet: &Jet2) -> f64 {
    0.5 * p.sigma * p.sigma * x * x * jet.dxx + p.mu * x * jet.dx - p.delta * jet.value
}

/// Killed generator `L_γ f = ½σ²x² f_xx + μx f_x − (δ+γ) f`.
pub fn generator_l_gamma(p: &ModelParams, x: f64, jet: &Jet2) -> f64 {
    0.5 * p.sigma * p.sigma * x * x * jet.dxx + p.mu * x * jet.dx - (p.delta + p.gamma) * jet.value
}

/// Intervention operator
/// `G(x, y, l; f) = f(x e^{−λl}, y − l) − f(x, y) + (1 − e^{−λl}) x/λ − C_s l`
/// for an arbitrary state function `f`: the change in `f` from selling `l`
/// shares plus the discounted proceeds of that sale.
pub fn gain_g<F>(p: &ModelParams, state: &MarketState, l: f64, f: F) -> f64
where
    F: Fn(&MarketState) -> f64,
{
    debug_assert!(
        (0.0..=state.inventory).contains(&l),
        "sale {l} outside [0, {}]",
        state.inventory
    );
    if l == 0.0 {
        return 0.0;
    }
    let after = MarketState::new(state.price * (-p.lambda * l).exp(), state.inventory - l);
    f(&after) - f(state) + (1.0 - (-p.lambda * l).exp()) * state.price / p.lambda
        - p.cost_sell * l
}

/// [`gain_g`] applied to the closed-form value function.
pub fn gain_g_value(constants: &DerivedConstants, state: &MarketState, l: f64) -> f64 {
    gain_g(&constants.params, state, l, |s| value(constants, s))
}

/// Normalized residual of the Hamilton–Jacobi–Bellman equation at one
/// state: `(L v + γ G(x, y, l*; v)) / (1 + |v|)`, with `l*` the optimal
/// sale.  Scale-free: the denominator keeps the residual meaningful both
/// where `v` is large and near the `v ≈ 0` corner.
pub fn hjb_residual(constants: &DerivedConstants, state: &MarketState) -> f64 {
    let jet = value_jet(constants, state);
    let l_star = optimal_sale_quantity(constants, state);
    let raw = generator_l(&constants.params, state.price, &jet)
        + constants.params.gamma * gain_g_value(constants, state, l_star);
    raw / (1.0 + jet.value.abs())
}

/// One continuity check in a [`FitReport`]: a single quantity compared from
/// both sides of one interface at one inventory level.
#[derive(Debug, Clone, Serialize)]
pub struct FitRow {
    /// Which interface: `"barrier"` (`x = F`) or `"full"` (`x = F·e^{λy}`).
    pub interface: &'static str,
    /// Inventory at which the interface was probed.
    pub inventory: f64,
    /// Which quantity: `"value"`, `"dx"`, `"dy"`, or `"dxx"`.
    pub quantity: &'static str,
    /// One-sided evaluation from the lower-price branch.
    pub left: f64,
    /// One-sided evaluation from the higher-price branch.
    pub right: f64,
    /// `|left − right| / (1 + max(|left|, |right|))`.
    pub rel_gap: f64,
}

/// Smooth-fit diagnostics: value and derivative continuity across both
/// region interfaces.
#[derive(Debug, Clone, Serialize)]
pub struct FitReport {
    /// All probed (interface, inventory, quantity) combinations.
    pub rows: Vec<FitRow>,
}

impl FitReport {
    /// Largest normalized mismatch across every row.
    pub fn max_rel_gap(&self) -> f64 {
        self.rows.iter().map(|r| r.rel_gap).fold(0.0, f64::max)
    }
}

/// Evaluates both one-sided branches of `v` and its derivatives exactly on
/// the two interfaces `x = F` and `x = F·e^{λy}` for each given inventory,
/// and reports the normalized gaps.
///
/// The optimal barrier is characterised by these gaps vanishing: value and
/// first derivatives match by construction of the coefficients, and the
/// second price derivative matches because both neighbouring branches solve
/// the same equation on the interface.
pub fn smooth_fit_report(constants: &DerivedConstants, inventories: &[f64]) -> FitReport {
    let lam = constants.params.lambda;
    let mut rows = Vec::with_capacity(inventories.len() * 8);
    for &y in inventories {
        let probes = [
            ("barrier", constants.barrier, jet_waiting(constants, constants.barrier, y),
             jet_intermediate(constants, constants.barrier, y)),
            ("full", constants.barrier * (lam * y).exp(),
             jet_intermediate(constants, constants.barrier * (lam * y).exp(), y),
             jet_full(constants, constants.barrier * (lam * y).exp(), y)),
        ];
        for (interface, _x, lo, hi) in probes {
            for (quantity, left, right) in [
                ("value", lo.value, hi.value),
                ("dx", lo.dx, hi.dx),
                ("dy", lo.dy, hi.dy),
                ("dxx", lo.dxx, hi.dxx),
            ] {
                let rel_gap = (left - right).abs() / (1.0 + left.abs().max(right.abs()));
                rows.push(FitRow { interface, inventory: y, quantity, left, right, rel_gap });
            }
        }
    }
    FitReport { rows }
}
