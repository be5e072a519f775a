//! Monte Carlo engine: exact price transitions between Poisson arrivals,
//! trading policies, episode simulation, and payoff estimation.
//!
//! Between consecutive trading opportunities the unaffected price is a
//! geometric Brownian motion, so transitions are sampled exactly:
//!
//! ```text
//! X_{t+Δ} = X_t · exp((μ − σ²/2)Δ + σ√Δ·Z),   Δ ~ Exp(γ),  Z ~ N(0,1)
//! ```
//!
//! and each of the seller's own trades multiplies the price by `e^{−λν}`
//! (sales) or `e^{+λν}` (buys).  No discretisation error enters anywhere;
//! the only systematic error of an estimate is the episode horizon, whose
//! worst-case contribution is bounded by [`truncation_bias_bound`].
//!
//! Reproducibility: every path owns a dedicated counter-based RNG stream
//! (ChaCha, keyed by the seed and streamed by the path index), so estimates
//! are bit-identical across runs and thread counts, and two policies run
//! with the same seed see the same noise path by path — common random
//! numbers for free.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::constants::DerivedConstants;
use crate::error::{ModelError, Result};
use crate::params::ModelParams;
use crate::state::MarketState;
use crate::value::optimal_sale_quantity;

/// Waiting time to the next trading opportunity: `Exp(γ)`.
pub fn next_arrival<R: Rng + ?Sized>(rng: &mut R, gamma: f64) -> f64 {
    Exp::new(gamma).expect("gamma > 0").sample(rng)
}

/// Exact geometric-Brownian transition of the price over `dt`.
pub fn evolve_price<R: Rng + ?Sized>(rng: &mut R, p: &ModelParams, price: f64, dt: f64) -> f64 {
    let z: f64 = StandardNormal.sample(rng);
    price * (p.log_drift() * dt + p.sigma * dt.sqrt() * z).exp()
}

/// Executes a sale of `quantity` shares: returns the post-trade state and
/// the (undiscounted) cash proceeds `(1 − e^{−λν})x/λ − C_s·ν`.
///
/// The price walks down the impact curve during the fill, which is what the
/// integral term `(1 − e^{−λν})x/λ < νx` accounts for.
pub fn apply_sale(p: &ModelParams, state: &MarketState, quantity: f64) -> Result<(MarketState, f64)> {
    if !(0.0..=state.inventory).contains(&quantity) {
        return Err(ModelError::QuantityOutOfRange {
            quantity,
            max: state.inventory,
        });
    }
    Ok(sale_unchecked(p, state, quantity))
}

fn sale_unchecked(p: &ModelParams, state: &MarketState, quantity: f64) -> (MarketState, f64) {
    if quantity == 0.0 {
        return (*state, 0.0);
    }
    let shrink = (-p.lambda * quantity).exp();
    let cash = (1.0 - shrink) * state.price / p.lambda - p.cost_sell * quantity;
    let after = MarketState::new(state.price * shrink, state.inventory - quantity);
    (after, cash)
}

/// Executes a buy of `quantity` shares: returns the post-trade state and
/// the (undiscounted) cash cost `(e^{λν} − 1)x/λ + C_b·ν`.
pub fn apply_buy(p: &ModelParams, state: &MarketState, quantity: f64) -> Result<(MarketState, f64)> {
    if quantity < 0.0 || !quantity.is_finite() {
        return Err(ModelError::QuantityOutOfRange {
            quantity,
            max: f64::INFINITY,
        });
    }
    let growth = (p.lambda * quantity).exp();
    let cost = (growth - 1.0) * state.price / p.lambda + p.cost_buy * quantity;
    let after = MarketState::new(state.price * growth, state.inventory + quantity);
    Ok((after, cost))
}

/// A selling rule: how many shares to unload at a trading opportunity.
///
/// Implementations must be `Send + Sync` so path batches can run in
/// parallel.
pub trait SellingPolicy: Send + Sync {
    /// Shares to sell when an opportunity arrives at time `t` in `state`.
    /// The returned quantity is clamped into `[0, inventory]` by the
    /// episode runner.
    fn sale(&self, state: &MarketState, t: f64) -> f64;
}

/// The optimal stationary policy: sell `min(y, (ln x − ln F)⁺/λ)`, i.e.
/// exactly enough to push the price back down to the barrier `F`.
#[derive(Debug, Clone, Copy)]
pub struct BarrierPolicy {
    constants: DerivedConstants,
}

impl BarrierPolicy {
    /// The barrier this policy defends.
    pub fn barrier(&self) -> f64 {
        self.constants.barrier
    }
}

impl SellingPolicy for BarrierPolicy {
    fn sale(&self, state: &MarketState, _t: f64) -> f64 {
        optimal_sale_quantity(&self.constants, state)
    }
}

/// Builds the optimal barrier policy from derived constants.
pub fn barrier_policy(constants: &DerivedConstants) -> BarrierPolicy {
    BarrierPolicy { constants: *constants }
}

/// A barrier policy defending an arbitrary (not necessarily optimal)
/// barrier level — the workhorse of barrier sweeps.
#[derive(Debug, Clone, Copy)]
pub struct FixedBarrierPolicy {
    /// Barrier level to defend.
    pub barrier: f64,
    /// Impact parameter λ (fixes the price→quantity conversion).
    pub lambda: f64,
}

impl SellingPolicy for FixedBarrierPolicy {
    fn sale(&self, state: &MarketState, _t: f64) -> f64 {
        let unconstrained = (state.price / self.barrier).ln().max(0.0) / self.lambda;
        unconstrained.min(state.inventory)
    }
}

/// Deadline wrapper: follow the barrier policy until time `deadline`, then
/// dump the whole remaining inventory at the first opportunity after it.
///
/// For deadline `j` this sacrifices at most `x·e^{−ηj}/λ` of value versus
/// the untruncated optimum, but is admissible (terminates almost surely)
/// for every parameter set, including `μ − σ²/2 < 0` where the pure barrier
/// strategy may never finish.
#[derive(Debug, Clone, Copy)]
pub struct TruncatedPolicy {
    inner: BarrierPolicy,
    deadline: f64,
}

impl TruncatedPolicy {
    /// The wrapped deadline.
    pub fn deadline(&self) -> f64 {
        self.deadline
    }
}

impl SellingPolicy for TruncatedPolicy {
    fn sale(&self, state: &MarketState, t: f64) -> f64 {
        if t <= self.deadline {
            self.inner.sale(state, t)
        } else {
            state.inventory
        }
    }
}

/// Builds the deadline-truncated barrier policy.
pub fn truncate_policy(constants: &DerivedConstants, deadline: f64) -> TruncatedPolicy {
    TruncatedPolicy {
        inner: barrier_policy(constants),
        deadline,
    }
}

/// Per-episode configuration.
#[derive(Debug, Clone, Copy)]
pub struct EpisodeConfig {
    /// Starting price and inventory.
    pub initial: MarketState,
    /// Hard cap on episode time: opportunities after the horizon are
    /// discarded.  `f64::INFINITY` is allowed for policies that terminate
    /// almost surely (e.g. [`TruncatedPolicy`]).
    pub horizon: f64,
    /// Whether to keep a per-arrival decision trace.
    pub record_decisions: bool,
}

impl EpisodeConfig {
    /// Config with the given start, a finite horizon, and no trace.
    pub fn new(initial: MarketState, horizon: f64) -> Self {
        Self {
            initial,
            horizon,
            record_decisions: false,
        }
    }
}

/// One row of an episode's decision trace: the state seen at a trading
/// opportunity and what the policy did with it.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DecisionRecord {
    /// 1-based index of the opportunity within its episode.
    pub jump_index: usize,
    /// Arrival time.
    pub time: f64,
    /// Price right before the trade (after the diffusion step).
    pub price_before: f64,
    /// Inventory right before the trade.
    pub inventory_before: f64,
    /// Shares sold.
    pub sold: f64,
    /// Discounted proceeds `e^{−δt}·cash` booked for this trade.
    pub gain_discounted: f64,
}

/// Everything a single simulated episode produced.
#[derive(Debug, Clone)]
pub struct EpisodeOutcome {
    /// Total discounted proceeds over the episode.
    pub payoff: f64,
    /// Decision trace (empty unless requested).
    pub decisions: Vec<DecisionRecord>,
    /// State when the episode ended (inventory 0, or the horizon).
    pub final_state: MarketState,
    /// Time of the last processed opportunity.
    pub final_time: f64,
    /// Number of opportunities processed.
    pub n_jumps: usize,
}

/// Simulates one episode of the given policy and returns its discounted
/// payoff (plus the trace when requested).
///
/// The episode ends when the inventory hits zero or the next opportunity
/// would fall past the horizon.  Each arrival consumes exactly one
/// exponential and one Gaussian draw, so different policies driven by
/// identically seeded generators experience the same market noise.
pub fn run_episode<R, P>(
    p: &ModelParams,
    policy: &P,
    config: &EpisodeConfig,
    rng: &mut R,
) -> EpisodeOutcome
where
    R: Rng + ?Sized,
    P: SellingPolicy + ?Sized,
{
    run_episode_impl(p, policy, config, &mut |_| {
        (next_arrival(rng, p.gamma), StandardNormal.sample(rng))
    })
}

/// Episode loop over an abstract per-arrival noise source `(Δt, Z)`.
fn run_episode_impl<P>(
    p: &ModelParams,
    policy: &P,
    config: &EpisodeConfig,
    draw: &mut dyn FnMut(usize) -> (f64, f64),
) -> EpisodeOutcome
where
    P: SellingPolicy + ?Sized,
{
    let mut state = config.initial;
    let mut t = 0.0;
    let mut payoff = 0.0;
    let mut decisions = Vec::new();
    let mut n_jumps = 0;

    while state.inventory > 0.0 {
        let (dt, z) = draw(n_jumps);
        if t + dt > config.horizon {
            break;
        }
        t += dt;
        n_jumps += 1;
        state.price *= (p.log_drift() * dt + p.sigma * dt.sqrt() * z).exp();

        let sold = policy.sale(&state, t).clamp(0.0, state.inventory);
        let (price_before, inventory_before) = (state.price, state.inventory);
        let (after, cash) = sale_unchecked(p, &state, sold);
        let gain_discounted = (-p.delta * t).exp() * cash;
        payoff += gain_discounted;
        state = after;

        if config.record_decisions {
            decisions.push(DecisionRecord {
                jump_index: n_jumps,
                time: t,
                price_before,
                inventory_before,
                sold,
                gain_discounted,
            });
        }
    }

    EpisodeOutcome {
        payoff,
        decisions,
        final_state: state,
        final_time: t,
        n_jumps,
    }
}

/// A Monte Carlo mean with its uncertainty.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PayoffEstimate {
    /// Sample mean of the discounted payoff.
    pub mean: f64,
    /// Standard error of the mean.
    pub std_error: f64,
    /// Number of independent samples behind the mean.
    pub n_paths: usize,
    /// Analytic bound on the value truncated away by the finite horizon
    /// (see [`truncation_bias_bound`]); the estimator can sit below the
    /// true expectation by at most this much.
    pub bias_bound: f64,
}

impl PayoffEstimate {
    fn from_samples(samples: &[f64], bias_bound: f64) -> Self {
        let n = samples.len();
        let mean = samples.iter().sum::<f64>() / n as f64;
        let var = samples.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / (n as f64 - 1.0);
        PayoffEstimate {
            mean,
            std_error: (var / n as f64).sqrt(),
            n_paths: n,
            bias_bound,
        }
    }
}

/// RNG stream for one path: seed fixes the experiment, the stream index
/// fixes the path, so path `i` sees the same noise in every run and under
/// any parallel schedule.
fn path_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Monte Carlo estimate of the expected discounted payoff of `policy`.
///
/// Paths run in parallel; the estimate is deterministic in `(seed,
/// n_paths)` and independent of the number of worker threads.
pub fn estimate_value<P>(
    p: &ModelParams,
    policy: &P,
    config: &EpisodeConfig,
    n_paths: usize,
    seed: u64,
) -> PayoffEstimate
where
    P: SellingPolicy + ?Sized,
{
    assert!(n_paths >= 2, "need at least two paths for a standard error");
    let samples: Vec<f64> = (0..n_paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = path_rng(seed, i as u64);
            run_episode(p, policy, config, &mut rng).payoff
        })
        .collect();
    let bias = truncation_bias_bound(p, config.initial.price, config.horizon);
    PayoffEstimate::from_samples(&samples, bias)
}

/// Antithetic-pairs variant of [`estimate_value`]: each pair shares its
/// exponential clock and runs the Gaussian stream once plainly and once
/// sign-flipped; the estimate averages pair means.  `n_pairs` pairs consume
/// `2·n_pairs` episodes.
pub fn estimate_value_antithetic<P>(
    p: &ModelParams,
    policy: &P,
    config: &EpisodeConfig,
    n_pairs: usize,
    seed: u64,
) -> PayoffEstimate
where
    P: SellingPolicy + ?Sized,
{
    assert!(n_pairs >= 2, "need at least two pairs for a standard error");
    let samples: Vec<f64> = (0..n_pairs)
        .into_par_iter()
        .map(|i| {
            let mut pair_payoffs = [0.0; 2];
            for (k, flip) in [1.0, -1.0].into_iter().enumerate() {
                let mut clock = path_rng(seed, 2 * i as u64);
                let mut gauss = path_rng(seed, 2 * i as u64 + 1);
                let outcome = run_episode_impl(p, policy, config, &mut |_| {
                    let z: f64 = StandardNormal.sample(&mut gauss);
                    (next_arrival(&mut clock, p.gamma), flip * z)
                });
                pair_payoffs[k] = outcome.payoff;
            }
            0.5 * (pair_payoffs[0] + pair_payoffs[1])
        })
        .collect();
    let bias = truncation_bias_bound(p, config.initial.price, config.horizon);
    PayoffEstimate::from_samples(&samples, bias)
}

/// Worst-case value lost to cutting an episode off at `horizon`: whatever
/// the optimal continuation after the horizon might earn is at most
/// `E[e^{−δT} X⁰_T]/λ = x·e^{−(δ−μ)T}/λ`, because no admissible strategy
/// can extract more than `X/λ` from any state.
pub fn truncation_bias_bound(p: &ModelParams, price: f64, horizon: f64) -> f64 {
    price * (-p.eta() * horizon).exp() / p.lambda
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::derive_constants;

    fn setup() -> (ModelParams, DerivedConstants) {
        let p = ModelParams::default_market();
        (p, derive_constants(&p).unwrap())
    }

    #[test]
    fn sale_conserves_inventory_and_knocks_price_down() {
        let (p, _) = setup();
        let state = MarketState::new(2.0, 10.0);
        let (after, cash) = apply_sale(&p, &state, 4.0).unwrap();
        assert!((after.inventory - 6.0).abs() < 1e-15);
        assert!((after.price - 2.0 * (-0.04f64).exp()).abs() < 1e-15);
        let expected = (1.0 - (-0.04f64).exp()) * 2.0 / 0.01 - 0.5 * 4.0;
        assert!((cash - expected).abs() < 1e-12);
    }

    #[test]
    fn oversale_is_refused() {
        let (p, _) = setup();
        let state = MarketState::new(2.0, 1.0);
        assert!(matches!(
            apply_sale(&p, &state, 1.5),
            Err(ModelError::QuantityOutOfRange { .. })
        ));
    }

    #[test]
    fn buy_then_sale_round_trips_the_price() {
        let (p, _) = setup();
        let state = MarketState::new(2.0, 1.0);
        let (bought, _) = apply_buy(&p, &state, 3.0).unwrap();
        let (back, _) = apply_sale(&p, &bought, 3.0).unwrap();
        assert!((back.price - state.price).abs() < 1e-14);
        assert!((back.inventory - state.inventory).abs() < 1e-15);
    }

    #[test]
    fn barrier_episode_liquidates_exactly() {
        let (p, c) = setup();
        let policy = barrier_policy(&c);
        let config = EpisodeConfig::new(MarketState::new(1.0, 100.0), 2000.0);
        let mut liquidated = 0;
        for i in 0..50 {
            let mut rng = path_rng(7, i);
            let outcome = run_episode(&p, &policy, &config, &mut rng);
            if outcome.final_state.inventory == 0.0 {
                liquidated += 1;
            }
            assert!(outcome.payoff.is_finite());
        }
        // μ − σ²/2 ≥ 0 here, so absorption is almost sure and a horizon of
        // 2000 should catch virtually every path.
        assert!(liquidated >= 48, "only {liquidated}/50 paths finished");
    }

    #[test]
    fn estimates_are_reproducible() {
        let (p, c) = setup();
        let policy = barrier_policy(&c);
        let config = EpisodeConfig::new(MarketState::new(1.0, 10.0), 100.0);
        let a = estimate_value(&p, &policy, &config, 500, 42);
        let b = estimate_value(&p, &policy, &config, 500, 42);
        assert_eq!(a.mean, b.mean);
        assert_eq!(a.std_error, b.std_error);
        let other = estimate_value(&p, &policy, &config, 500, 43);
        assert_ne!(a.mean, other.mean);
    }

    #[test]
    fn truncated_policy_dumps_after_deadline() {
        let (p, c) = setup();
        let policy = truncate_policy(&c, 0.0);
        let config = EpisodeConfig {
            initial: MarketState::new(1.0, 50.0),
            horizon: f64::INFINITY,
            record_decisions: true,
        };
        let mut rng = path_rng(11, 0);
        let outcome = run_episode(&p, &policy, &config, &mut rng);
        assert_eq!(outcome.n_jumps, 1);
        assert_eq!(outcome.decisions[0].sold, 50.0);
        assert_eq!(outcome.final_state.inventory, 0.0);
    }

    #[test]
    fn bias_bound_decays_at_rate_eta() {
        let (p, _) = setup();
        let b0 = truncation_bias_bound(&p, 1.0, 0.0);
        assert!((b0 - 1.0 / p.lambda).abs() < 1e-12);
        let ratio = truncation_bias_bound(&p, 1.0, 10.0) / truncation_bias_bound(&p, 1.0, 0.0);
        assert!((ratio - (-p.eta() * 10.0).exp()).abs() < 1e-15);
    }
}
