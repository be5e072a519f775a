//! Run configuration: a flat JSON parameter file merged with command-line
//! overrides, validated fully before any computation starts.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use optexec_core::{validate_params, MarketState, ModelParams};
use serde::Deserialize;

/// Fully resolved configuration for one command invocation.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub params: ModelParams,
    /// Initial quoted price.
    pub x: f64,
    /// Initial inventory.
    pub y: f64,
    /// Monte Carlo paths per estimate.
    pub n_paths: usize,
    /// Root seed; every estimate is a pure function of it.
    pub seed: u64,
    /// Truncation-bias budget used to pick the simulation horizon.
    pub bias_epsilon: f64,
    /// Paths whose decision traces are written to CSV.
    pub trace_paths: usize,
    /// Value-surface grid size (price × inventory).
    pub grid_nx: usize,
    pub grid_ny: usize,
    /// Barrier levels in a sweep.
    pub sweep_levels: usize,
    /// Grid-solver mesh.
    pub pde_n_price: usize,
    pub pde_n_inventory: usize,
    pub pde_y_max: f64,
    pub pde_span: f64,
    /// Directory CSV reports are written into.
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            params: ModelParams::default_market(),
            x: 1.0,
            y: 100.0,
            n_paths: 20_000,
            seed: 7,
            bias_epsilon: 1e-8,
            trace_paths: 10,
            grid_nx: 40,
            grid_ny: 40,
            sweep_levels: 25,
            pde_n_price: 400,
            pde_n_inventory: 80,
            pde_y_max: 100.0,
            pde_span: 8.0,
            output_dir: PathBuf::from("out"),
        }
    }
}

/// The on-disk schema: one flat JSON object, every key optional, unknown
/// keys rejected so a typo cannot silently fall back to a default.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    mu: Option<f64>,
    sigma: Option<f64>,
    delta: Option<f64>,
    lambda: Option<f64>,
    gamma: Option<f64>,
    cost_sell: Option<f64>,
    cost_buy: Option<f64>,
    x: Option<f64>,
    y: Option<f64>,
    n_paths: Option<usize>,
    seed: Option<u64>,
    bias_epsilon: Option<f64>,
    trace_paths: Option<usize>,
    grid_nx: Option<usize>,
    grid_ny: Option<usize>,
    sweep_levels: Option<usize>,
    pde_n_price: Option<usize>,
    pde_n_inventory: Option<usize>,
    pde_y_max: Option<f64>,
    pde_span: Option<f64>,
    output_dir: Option<PathBuf>,
}

/// Command-line overrides that take precedence over the file.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub paths: Option<usize>,
    pub out: Option<PathBuf>,
    pub x: Option<f64>,
    pub y: Option<f64>,
}

impl RunConfig {
    /// Loads defaults, then the optional file, then the flag overrides,
    /// and validates the result.  Any failure here is a usage error.
    pub fn resolve(file: Option<&Path>, overrides: &Overrides) -> Result<Self> {
        let mut config = RunConfig::default();
        if let Some(path) = file {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("cannot read config file {}", path.display()))?;
            let parsed: FileConfig = serde_json::from_str(&text)
                .with_context(|| format!("cannot parse config file {}", path.display()))?;
            config.apply_file(parsed);
        }
        if let Some(seed) = overrides.seed {
            config.seed = seed;
        }
        if let Some(paths) = overrides.paths {
            config.n_paths = paths;
        }
        if let Some(out) = &overrides.out {
            config.output_dir = out.clone();
        }
        if let Some(x) = overrides.x {
            config.x = x;
        }
        if let Some(y) = overrides.y {
            config.y = y;
        }
        config.validate()?;
        Ok(config)
    }

    fn apply_file(&mut self, f: FileConfig) {
        let p = &mut self.params;
        if let Some(v) = f.mu {
            p.mu = v;
        }
        if let Some(v) = f.sigma {
            p.sigma = v;
        }
        if let Some(v) = f.delta {
            p.delta = v;
        }
        if let Some(v) = f.lambda {
            p.lambda = v;
        }
        if let Some(v) = f.gamma {
            p.gamma = v;
        }
        if let Some(v) = f.cost_sell {
            p.cost_sell = v;
        }
        if let Some(v) = f.cost_buy {
            p.cost_buy = v;
        }
        if let Some(v) = f.x {
            self.x = v;
        }
        if let Some(v) = f.y {
            self.y = v;
        }
        if let Some(v) = f.n_paths {
            self.n_paths = v;
        }
        if let Some(v) = f.seed {
            self.seed = v;
        }
        if let Some(v) = f.bias_epsilon {
            self.bias_epsilon = v;
        }
        if let Some(v) = f.trace_paths {
            self.trace_paths = v;
        }
        if let Some(v) = f.grid_nx {
            self.grid_nx = v;
        }
        if let Some(v) = f.grid_ny {
            self.grid_ny = v;
        }
        if let Some(v) = f.sweep_levels {
            self.sweep_levels = v;
        }
        if let Some(v) = f.pde_n_price {
            self.pde_n_price = v;
        }
        if let Some(v) = f.pde_n_inventory {
            self.pde_n_inventory = v;
        }
        if let Some(v) = f.pde_y_max {
            self.pde_y_max = v;
        }
        if let Some(v) = f.pde_span {
            self.pde_span = v;
        }
        if let Some(v) = f.output_dir {
            self.output_dir = v;
        }
    }

    fn validate(&self) -> Result<()> {
        let report = validate_params(&self.params);
        if !report.is_valid() {
            bail!("invalid model parameters: {report}");
        }
        if !(self.x.is_finite() && self.x > 0.0) {
            bail!("x must be a finite positive price, got {}", self.x);
        }
        if !(self.y.is_finite() && self.y >= 0.0) {
            bail!("y must be a finite nonnegative inventory, got {}", self.y);
        }
        if self.n_paths < 2 {
            bail!("n_paths must be at least 2, got {}", self.n_paths);
        }
        if !(self.bias_epsilon > 0.0 && self.bias_epsilon < 1.0) {
            bail!("bias_epsilon must lie in (0, 1), got {}", self.bias_epsilon);
        }
        if self.grid_nx < 2 || self.grid_ny < 2 {
            bail!("grid_nx and grid_ny must be at least 2");
        }
        if self.sweep_levels < 2 {
            bail!("sweep_levels must be at least 2, got {}", self.sweep_levels);
        }
        if self.pde_n_price < 8 || self.pde_n_inventory < 3 {
            bail!("pde grid must be at least 8×3 nodes");
        }
        if !(self.pde_y_max > 0.0 && self.pde_y_max.is_finite()) {
            bail!("pde_y_max must be finite and positive, got {}", self.pde_y_max);
        }
        if !(self.pde_span > 1.0 && self.pde_span.is_finite()) {
            bail!("pde_span must be finite and exceed 1, got {}", self.pde_span);
        }
        Ok(())
    }

    /// The configured starting state.
    pub fn initial_state(&self) -> MarketState {
        MarketState::new(self.x, self.y)
    }
}
