//! Cross-verification drivers: barrier sweeps under common random numbers
//! and Monte Carlo vs. closed-form comparisons.

use serde::Serialize;

use crate::constants::DerivedConstants;
use crate::params::ModelParams;
use crate::simulate::{
    estimate_value, truncation_bias_bound, EpisodeConfig, FixedBarrierPolicy, PayoffEstimate,
};
use crate::state::MarketState;
use crate::value::value;

/// Outcome of a common-random-number barrier sweep.
#[derive(Debug, Clone, Serialize)]
pub struct SweepResult {
    /// Candidate barrier levels, strictly increasing.
    pub grid: Vec<f64>,
    /// Monte Carlo estimate for each barrier, aligned with `grid`.
    pub estimates: Vec<PayoffEstimate>,
    /// Barrier whose estimate came out highest.
    pub argmax_barrier: f64,
    /// The analytically optimal barrier the sweep is probing.
    pub closed_form_barrier: f64,
}

impl SweepResult {
    /// Index of the empirically best barrier.
    pub fn argmax_index(&self) -> usize {
        let mut best = 0;
        for (i, e) in self.estimates.iter().enumerate() {
            if e.mean > self.estimates[best].mean {
                best = i;
            }
        }
        best
    }

    /// Estimate recorded for an exact grid level, if present.
    pub fn estimate_at(&self, barrier: f64) -> Option<&PayoffEstimate> {
        self.grid
            .iter()
            .position(|&b| b == barrier)
            .map(|i| &self.estimates[i])
    }
}

/// Candidate barrier grid for optimality sweeps: an even spread from the
/// sale cost `C_s` (below which a barrier is never rational) up to twice
/// the infinite-intensity barrier, plus the candidate optimum itself.
pub fn default_barrier_grid(constants: &DerivedConstants) -> Vec<f64> {
    let lo = constants.params.cost_sell;
    let hi = 2.0 * constants.barrier_limit;
    let count = 24;
    let mut grid: Vec<f64> = (0..count)
        .map(|k| lo + (hi - lo) * k as f64 / (count - 1) as f64)
        .collect();
    grid.push(constants.barrier);
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    grid.dedup();
    grid
}

/// Estimates the value of defending each barrier in `barriers`, using the
/// same seed — and therefore the same noise paths — for every barrier, so
/// differences between estimates are far less noisy than the estimates
/// themselves (common random numbers).
///
/// `barriers` must be strictly increasing (as [`default_barrier_grid`]
/// produces).
pub fn sweep_barrier(
    constants: &DerivedConstants,
    barriers: &[f64],
    config: &EpisodeConfig,
    n_paths: usize,
    seed: u64,
) -> SweepResult {
    assert!(
        barriers.windows(2).all(|w| w[0] < w[1]),
        "barrier grid must be strictly increasing"
    );
    let p = &constants.params;
    let estimates: Vec<PayoffEstimate> = barriers
        .iter()
        .map(|&barrier| {
            let policy = FixedBarrierPolicy {
                barrier,
                lambda: p.lambda,
            };
            estimate_value(p, &policy, config, n_paths, seed)
        })
        .collect();
    let mut result = SweepResult {
        grid: barriers.to_vec(),
        estimates,
        argmax_barrier: f64::NAN,
        closed_form_barrier: constants.barrier,
    };
    result.argmax_barrier = result.grid[result.argmax_index()];
    result
}

/// Monte Carlo vs. closed form at one starting state.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct StateComparison {
    /// Starting price.
    pub price: f64,
    /// Starting inventory.
    pub inventory: f64,
    /// Closed-form value at the start.
    pub closed_form: f64,
    /// Monte Carlo estimate under the optimal barrier policy.
    pub estimate: PayoffEstimate,
    /// Worst-case value beyond the episode horizon.
    pub bias_bound: f64,
    /// Plain z-score `(mean − v)/stderr`; zero when both sides are exact.
    pub z: f64,
    /// Standard errors by which the estimate misses the closed form
    /// *beyond* what horizon truncation alone could explain:
    /// `max(0, |mean − v| − bias)/stderr`.
    pub z_adjusted: f64,
}

/// A batch of Monte Carlo vs. closed-form comparisons.
#[derive(Debug, Clone, Serialize)]
pub struct ComparisonReport {
    /// One row per starting state.
    pub rows: Vec<StateComparison>,
}

impl ComparisonReport {
    /// Worst plain z-score magnitude across all rows.
    pub fn max_z(&self) -> f64 {
        self.rows.iter().map(|r| r.z.abs()).fold(0.0, f64::max)
    }

    /// Worst truncation-adjusted z-score across all rows.
    pub fn max_z_adjusted(&self) -> f64 {
        self.rows.iter().map(|r| r.z_adjusted).fold(0.0, f64::max)
    }
}

/// Episode horizon long enough that truncation contributes at most
/// `epsilon·x/λ` of bias: `T = ln(1/ε)/η`.
pub fn horizon_for_bias(p: &ModelParams, epsilon: f64) -> f64 {
    (1.0 / epsilon).ln() / p.eta()
}

/// Simulates the optimal barrier policy from each starting state and
/// compares the estimate against the closed-form value, accounting for the
/// truncation bias of the finite horizon.
pub fn mc_vs_closed_form(
    constants: &DerivedConstants,
    states: &[MarketState],
    horizon: f64,
    n_paths: usize,
    seed: u64,
) -> ComparisonReport {
    let p = &constants.params;
    let policy = crate::simulate::barrier_policy(constants);
    let rows = states
        .iter()
        .map(|&initial| {
            let config = EpisodeConfig::new(initial, horizon);
            let estimate = estimate_value(p, &policy, &config, n_paths, seed);
            let closed_form = value(constants, &initial);
            let bias_bound = truncation_bias_bound(p, initial.price, horizon);
            let diff = estimate.mean - closed_form;
            // An exhausted start is exact on both sides: 0 = 0 with no
            // spread.  Score it 0 rather than 0/0.
            let z = if estimate.std_error == 0.0 {
                if diff == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            } else {
                diff / estimate.std_error
            };
            let z_adjusted = if estimate.std_error == 0.0 {
                if diff.abs() <= bias_bound {
                    0.0
                } else {
                    f64::INFINITY
                }
            } else {
                (diff.abs() - bias_bound).max(0.0) / estimate.std_error
            };
            StateComparison {
                price: initial.price,
                inventory: initial.inventory,
                closed_form,
                estimate,
                bias_bound,
                z,
                z_adjusted,
            }
        })
        .collect();
    ComparisonReport { rows }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::derive_constants;

    #[test]
    fn grid_contains_the_candidate_and_is_sorted() {
        let c = derive_constants(&ModelParams::default_market()).unwrap();
        let grid = default_barrier_grid(&c);
        assert!(grid.windows(2).all(|w| w[0] < w[1]));
        assert!(grid.iter().any(|&b| b == c.barrier));
        assert_eq!(grid.first().copied(), Some(c.params.cost_sell));
    }

    #[test]
    fn horizon_scales_logarithmically_with_bias() {
        let p = ModelParams::default_market();
        let t = horizon_for_bias(&p, 1e-5);
        assert!((t - (1e5f64).ln() / 0.05).abs() < 1e-12);
    }

    #[test]
    fn comparison_accepts_the_closed_form() {
        let c = derive_constants(&ModelParams::default_market()).unwrap();
        let states = [MarketState::new(1.0, 10.0)];
        let report = mc_vs_closed_form(&c, &states, horizon_for_bias(&c.params, 1e-5), 4000, 9);
        assert!(report.max_z() < 4.0, "z = {}", report.max_z());
    }
}
