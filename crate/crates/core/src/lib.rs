//! Optimal execution of a large share position under a Poisson trading clock
//! with multiplicative (permanent) price impact.
//!
//! An agent holds `y` shares of an asset whose unaffected price follows a
//! geometric Brownian motion
//!
//! ```text
//! dX⁰ = μ X⁰ dt + σ X⁰ dW
//! ```
//!
//! Trades are only allowed at the arrival times of an independent Poisson
//! process with rate `γ`, and every trade of `ν` shares moves the price
//! permanently by the factor `e∓λν`. The agent maximises the expected net
//! present value of liquidation gains, discounted at rate `δ > μ`, net of
//! proportional transaction costs `C_s` (sell) and `C_b` (buy).
//!
//! The optimal policy is a *barrier strategy*: at each clock arrival, sell
//! exactly enough shares to push the impacted price down to a critical level
//! `F_γ` (capped by the remaining inventory), and sell nothing below it. The
//! associated value function is known in closed form.
//!
//! This crate provides three independent layers that cross-verify each other:
//!
//! * [`params`] / [`constants`] — parameter validation and every derived
//!   constant of the closed form (the roots `n`, `m_γ`, the barrier `F_γ`,
//!   the coefficients `A_γ`, `C_γ`, and the singular-control limit `F_∞`);
//! * [`value`] — the piecewise closed-form value function, its analytic
//!   derivatives, the generators `L`, `L_γ`, the jump-gain operator `G`, and
//!   residual / smooth-fit diagnostics;
//! * [`simulate`] / [`sweep`] / [`pde`] — an event-driven Monte Carlo engine
//!   with reproducible parallel streams, a common-random-number barrier
//!   sweep, and a finite-difference policy-iteration solver for the full
//!   HJB equation that never touches the closed form.
//!
//! All floating-point work is in `f64`. Functions are pure and the types are
//! `Send + Sync`, so everything can be called concurrently without locks.

pub mod constants;
pub mod error;
pub mod params;
pub mod pde;
pub mod purify;
pub mod simulate;
pub mod state;
pub mod sweep;
pub mod value;

pub use constants::{a_gamma, derive_constants, negative_root_m, positive_root_n, DerivedConstants};
pub use error::{ModelError, Result};
pub use params::{validate_params, ModelParams, ValidationReport};
pub use pde::{
    argmax_on_interval, pde_solve, PdeGrid, PdeGridSpec, DEFAULT_MAX_ITERATIONS,
    DEFAULT_TOLERANCE,
};
pub use purify::{purify_strategy, Trade};
pub use simulate::{
    apply_buy, apply_sale, barrier_policy, estimate_value, estimate_value_antithetic,
    evolve_price, next_arrival, run_episode, truncate_policy, truncation_bias_bound,
    BarrierPolicy, DecisionRecord, EpisodeConfig, EpisodeOutcome, FixedBarrierPolicy,
    PayoffEstimate, SellingPolicy, TruncatedPolicy,
};
pub use state::{classify_region, MarketState, Region};
pub use sweep::{
    default_barrier_grid, horizon_for_bias, mc_vs_closed_form, sweep_barrier, ComparisonReport,
    StateComparison, SweepResult,
};
pub use value::{
    gain_g, gain_g_value, generator_l, generator_l_gamma, hjb_residual, optimal_sale_quantity,
    smooth_fit_report, value, value_dx, value_dxx, value_dy, value_jet, value_limit, FitReport,
    FitRow, Jet2,
};
