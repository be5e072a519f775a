//! Helpers shared by the integration suites: reproducible parameter
//! draws, the normalised gap used throughout the tolerances, and a
//! self-contained evaluator for mixed buy/sell strategies on common noise.
#![allow(dead_code)]

use optexec_core::{evolve_price, next_arrival, ModelParams, Trade};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Normalised gap `|a − ref|/(1 + |ref|)`: behaves like a relative error
/// for large references and an absolute one near zero, so a single
/// tolerance works across value scales.
pub fn rel_gap(a: f64, reference: f64) -> f64 {
    (a - reference).abs() / (1.0 + reference.abs())
}

/// A random admissible parameter set over wide ranges.
pub fn draw_params(rng: &mut ChaCha8Rng) -> ModelParams {
    let delta = rng.gen_range(0.01..0.5);
    ModelParams {
        mu: rng.gen_range(0.0..0.95 * delta),
        sigma: rng.gen_range(0.05..1.0),
        delta,
        lambda: rng.gen_range(1e-4..1.0),
        gamma: rng.gen_range(1e-3..1e3),
        cost_sell: rng.gen_range(0.01..10.0),
        cost_buy: rng.gen_range(0.01..10.0),
    }
}

/// Smallest quantity step used by the exact-arithmetic purification
/// checks.  Sums of multiples of 2⁻²⁰ below ~2³² are exact in an `f64`,
/// so prefix inequalities on such quantities hold with no rounding slack.
pub const QUANTUM: f64 = 1.0 / (1 << 20) as f64;

/// Quantises `fraction·max` down to the dyadic grid.
pub fn dyadic(fraction: f64, max: f64) -> f64 {
    ((fraction * max) / QUANTUM).floor() * QUANTUM
}

/// A reproducible mixed buy/sell schedule: one trade per opportunity,
/// never both sides at once, sells capped by the running inventory.
/// All quantities are dyadic so inventory arithmetic is exact.
pub fn draw_mixed_schedule(rng: &mut ChaCha8Rng, y0: f64, jumps: usize) -> Vec<Trade> {
    let mut inventory = y0;
    let mut schedule = Vec::with_capacity(jumps);
    for _ in 0..jumps {
        let trade = if rng.gen_bool(0.5) {
            let sell = dyadic(rng.gen::<f64>(), inventory.min(8.0));
            inventory -= sell;
            Trade::sale(sell)
        } else {
            let buy = dyadic(rng.gen::<f64>(), 4.0);
            inventory += buy;
            Trade { sell: 0.0, buy }
        };
        schedule.push(trade);
    }
    schedule
}

/// Discounted payoffs of a mixed schedule and of a sell-only schedule on
/// the *same* arrival times and price path.  Written against the raw cash
/// formulas rather than the episode runner, so it doubles as an
/// independent check of the engine's bookkeeping.
///
/// Positions: `X_t = X⁰_t·e^{−λ(sold − bought)}`; a sale of ν at impacted
/// price x earns `(1 − e^{−λν})x/λ − C_s·ν`, a purchase costs
/// `(e^{λν} − 1)x/λ + C_b·ν`, both discounted by `e^{−δt}`.
pub fn paired_payoffs(
    p: &ModelParams,
    x0: f64,
    mixed: &[Trade],
    sell_only: &[f64],
    rng: &mut ChaCha8Rng,
) -> (f64, f64) {
    assert_eq!(mixed.len(), sell_only.len());
    let mut t = 0.0;
    let mut unimpacted = x0;
    let (mut sold_m, mut bought_m, mut sold_p) = (0.0f64, 0.0f64, 0.0f64);
    let (mut pay_m, mut pay_p) = (0.0f64, 0.0f64);
    for (trade, &nu) in mixed.iter().zip(sell_only) {
        let dt = next_arrival(rng, p.gamma);
        t += dt;
        unimpacted = evolve_price(rng, p, unimpacted, dt);
        let disc = (-p.delta * t).exp();

        let xm = unimpacted * (-p.lambda * (sold_m - bought_m)).exp();
        pay_m += disc
            * ((1.0 - (-p.lambda * trade.sell).exp()) * xm / p.lambda
                - p.cost_sell * trade.sell);
        let after_sale = xm * (-p.lambda * trade.sell).exp();
        pay_m -= disc
            * (((p.lambda * trade.buy).exp() - 1.0) * after_sale / p.lambda
                + p.cost_buy * trade.buy);
        sold_m += trade.sell;
        bought_m += trade.buy;

        let xp = unimpacted * (-p.lambda * sold_p).exp();
        pay_p += disc * ((1.0 - (-p.lambda * nu).exp()) * xp / p.lambda - p.cost_sell * nu);
        sold_p += nu;
    }
    (pay_m, pay_p)
}

/// Mean and standard error of a sample.
pub fn mean_and_stderr(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
