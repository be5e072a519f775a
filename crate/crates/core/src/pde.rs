//! Finite-difference solver for the stationary Hamilton–Jacobi–Bellman
//! equation, used as an independent check on the closed-form value.
//!
//! In log-price `z = ln x` the equation for a *fixed* sale rule `l(z, y)`
//! reads
//!
//! ```text
//! ½σ² w_zz + (μ − σ²/2) w_z − (δ+γ) w(z,y)
//!     + γ [ w(z − λl, y − l) + (1 − e^{−λl}) e^z/λ − C_s·l ] = 0
//! ```
//!
//! and the solver performs policy iteration: evaluate the current rule by
//! solving the linear equation, then replace the rule by the pointwise
//! maximiser of the jump gain, until the value field stops changing.  The
//! iteration starts from the do-nothing rule, whose value is identically
//! zero; nothing about the closed-form solution enters (the derived
//! constants fix only the domain placement and the subsonic boundary
//! growth rate `n`, which comes from the characteristic quadratic, not
//! from the solution).
//!
//! Structure that makes the evaluation step cheap: sales only ever
//! *decrease* inventory, so on a grid the coupling between inventory
//! levels is one-way and rows can be solved bottom-up, each as a small
//! banded linear system (sub-bands from the jump displacement plus one
//! superdiagonal from the diffusion stencil), by banded LU without
//! pivoting.
//!
//! Boundary closures:
//! * `y = 0`: the value is identically zero (nothing left to sell);
//! * low price edge: in the no-trade zone the bounded solution grows like
//!   `xⁿ`, so `w(z_min) = e^{−n·dz} w(z_min + dz)`;
//! * high price edge: the value is asymptotically linear in the price
//!   (`v_xx → 0`), leaving `μ w_z − (δ+γ) w + γ[jump + gain] = 0` with a
//!   one-sided difference for `w_z`;
//! * jump targets that undershoot the low edge reuse the `xⁿ` growth:
//!   `w(z*, ·) = e^{n(z* − z_min)} w(z_min, ·)`.

use serde::Serialize;

use crate::constants::DerivedConstants;
use crate::error::{ModelError, Result};

/// Discretisation request for [`pde_solve`].
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PdeGridSpec {
    /// Number of log-price nodes.
    pub n_price: usize,
    /// Number of inventory nodes (including the `y = 0` row).
    pub n_inventory: usize,
    /// Largest inventory on the grid.
    pub y_max: f64,
    /// Price span factor: the grid covers `[F/span, span·F·e^{λ·y_max}]`.
    pub span: f64,
}

impl Default for PdeGridSpec {
    fn default() -> Self {
        Self {
            n_price: 400,
            n_inventory: 80,
            y_max: 100.0,
            span: 8.0,
        }
    }
}

/// Converged finite-difference solution.
#[derive(Debug, Clone)]
pub struct PdeGrid {
    /// Log-price nodes (uniform).
    pub zs: Vec<f64>,
    /// Price nodes `e^z`.
    pub prices: Vec<f64>,
    /// Inventory nodes (uniform, starting at 0).
    pub inventories: Vec<f64>,
    /// Value field, `values[j][i]` at `(prices[i], inventories[j])`.
    pub values: Vec<Vec<f64>>,
    /// Converged sale rule, same layout.
    pub policies: Vec<Vec<f64>>,
    /// Impact parameter λ the grid was solved with (fixes the
    /// shares-per-log-price conversion of [`PdeGrid::switch_curve`]).
    pub lambda: f64,
    /// Policy-iteration rounds used.
    pub iterations: usize,
    /// Sup-norm value change after each round.
    pub change_history: Vec<f64>,
}

impl PdeGrid {
    /// Log-price step.
    pub fn dz(&self) -> f64 {
        self.zs[1] - self.zs[0]
    }

    /// Inventory step.
    pub fn dy(&self) -> f64 {
        self.inventories[1] - self.inventories[0]
    }

    /// Bilinear interpolation of the value field; arguments are clamped
    /// into the grid box.
    pub fn value_at(&self, price: f64, inventory: f64) -> f64 {
        let z = price.ln().clamp(self.zs[0], *self.zs.last().unwrap());
        let y = inventory.clamp(0.0, *self.inventories.last().unwrap());
        let (dz, dy) = (self.dz(), self.dy());
        let (fi, fj) = ((z - self.zs[0]) / dz, y / dy);
        let i = (fi.floor() as usize).min(self.zs.len() - 2);
        let j = (fj.floor() as usize).min(self.inventories.len() - 2);
        let tz = (fi - i as f64).min(1.0);
        let ty = (fj - j as f64).min(1.0);
        (1.0 - ty) * ((1.0 - tz) * self.values[j][i] + tz * self.values[j][i + 1])
            + ty * ((1.0 - tz) * self.values[j + 1][i] + tz * self.values[j + 1][i + 1])
    }

    /// For each positive inventory row, the smallest price node at which
    /// the converged rule sells at all — the numerical free boundary.
    /// (The policy search snaps negligible quantities to an exact zero, so
    /// `l > 0` is a clean detector.)
    pub fn switch_curve(&self) -> Vec<(f64, f64)> {
        let mut curve = Vec::new();
        for (j, row) in self.policies.iter().enumerate().skip(1) {
            if let Some(i) = row.iter().position(|&l| l > 0.0) {
                curve.push((self.inventories[j], self.prices[i]));
            }
        }
        curve
    }
}

/// Default sup-norm convergence tolerance for [`pde_solve`].
pub const DEFAULT_TOLERANCE: f64 = 1e-10;
/// Default outer-iteration cap for [`pde_solve`].
pub const DEFAULT_MAX_ITERATIONS: usize = 200;

/// Solves the control problem on a grid by policy iteration.
///
/// Converges when the value field changes by at most `tol` in sup norm
/// between rounds; errors with [`ModelError::NoConvergence`] (carrying the
/// change history) after `max_iters` rounds.
pub fn pde_solve(
    constants: &DerivedConstants,
    spec: &PdeGridSpec,
    tol: f64,
    max_iters: usize,
) -> Result<PdeGrid> {
    if !(tol > 0.0) || max_iters == 0 {
        return Err(ModelError::InvalidConfig(format!(
            "need a positive tolerance and at least one iteration, got tol={tol}, max_iters={max_iters}"
        )));
    }
    Solver::new(constants, spec)?.run(tol, max_iters)
}

struct Solver {
    nz: usize,
    ny: usize,
    dz: f64,
    dy: f64,
    zs: Vec<f64>,
    /// Price nodes `e^z`, precomputed for the gain term.
    xs: Vec<f64>,
    ys: Vec<f64>,
    /// Lower bandwidth of the per-row systems.
    band: usize,
    // model numbers
    sigma2: f64,
    theta: f64,
    mu: f64,
    delta: f64,
    gamma: f64,
    lambda: f64,
    cost_sell: f64,
    growth_n: f64,
}

impl Solver {
    fn new(constants: &DerivedConstants, spec: &PdeGridSpec) -> Result<Self> {
        if spec.n_price < 16 || spec.n_inventory < 3 {
            return Err(ModelError::InvalidConfig(format!(
                "grid too small: {}x{} (need at least 16x3)",
                spec.n_price, spec.n_inventory
            )));
        }
        if !(spec.y_max > 0.0) || !(spec.span > 1.0) {
            return Err(ModelError::InvalidConfig(format!(
                "need y_max > 0 and span > 1, got y_max = {}, span = {}",
                spec.y_max, spec.span
            )));
        }
        let p = constants.params;
        let z_min = (constants.barrier / spec.span).ln();
        let z_max = (spec.span * constants.barrier).ln() + p.lambda * spec.y_max;
        let nz = spec.n_price;
        let ny = spec.n_inventory;
        let dz = (z_max - z_min) / (nz - 1) as f64;
        let dy = spec.y_max / (ny - 1) as f64;
        let zs: Vec<f64> = (0..nz).map(|i| z_min + i as f64 * dz).collect();
        let xs: Vec<f64> = zs.iter().map(|z| z.exp()).collect();
        let ys: Vec<f64> = (0..ny).map(|j| j as f64 * dy).collect();
        // In-row jump couplings only occur for sales smaller than one
        // inventory cell (larger sales land on already-solved rows), so the
        // in-row displacement is under λ·dy; pad by one cell for the floor.
        let band = ((p.lambda * dy / dz).floor() as usize + 2).min(nz - 1);
        Ok(Self {
            nz,
            ny,
            dz,
            dy,
            zs,
            xs,
            ys,
            band,
            sigma2: p.sigma * p.sigma,
            theta: p.log_drift(),
            mu: p.mu,
            delta: p.delta,
            gamma: p.gamma,
            lambda: p.lambda,
            cost_sell: p.cost_sell,
            growth_n: constants.n,
        })
    }

    /// Sale proceeds of `l` shares at price `x` (undiscounted).
    #[inline]
    fn gain(&self, x: f64, l: f64) -> f64 {
        if l == 0.0 {
            return 0.0;
        }
        (1.0 - (-self.lambda * l).exp()) * x / self.lambda - self.cost_sell * l
    }

    /// Value of a (possibly off-grid) point from one already-known row,
    /// with the `xⁿ` growth closure below the low edge.
    fn interp_known_row(&self, row: &[f64], z_star: f64) -> f64 {
        if z_star < self.zs[0] {
            return (self.growth_n * (z_star - self.zs[0])).exp() * row[0];
        }
        let fi = (z_star - self.zs[0]) / self.dz;
        let i = (fi.floor() as usize).min(self.nz - 2);
        let t = (fi - i as f64).min(1.0);
        (1.0 - t) * row[i] + t * row[i + 1]
    }

    /// Bilinear value lookup used by the improvement step (all rows are
    /// known there).  Floor-then-clamp keeps the top row reachable: a
    /// lookup exactly at `y_max` must weight the last row fully, not fall
    /// back to the one below it.
    fn interp_field(&self, values: &[Vec<f64>], z_star: f64, y_star: f64) -> f64 {
        let fj = (y_star / self.dy).max(0.0);
        let j = (fj.floor() as usize).min(self.ny - 2);
        let t = (fj - j as f64).min(1.0);
        let lo = self.interp_known_row(&values[j], z_star);
        if t > 0.0 {
            let hi = self.interp_known_row(&values[j + 1], z_star);
            (1.0 - t) * lo + t * hi
        } else {
            lo
        }
    }

    /// Second-order value lookup used only to extract the reported policy
    /// from the converged field (the iteration itself stays bilinear).
    /// The extraction needs the extra order of accuracy: a first-order
    /// slope error in the jump value biases the sell/hold comparison by
    /// `O(dz)·w_zz`, which is visible exactly at the free boundary where
    /// the true marginal vanishes — with bilinear lookups the recovered
    /// boundary drifts a cell or two into the hold region wherever `w` is
    /// large.
    fn interp_field_quad(&self, values: &[Vec<f64>], z_star: f64, y_star: f64) -> f64 {
        let fj = (y_star / self.dy).clamp(0.0, (self.ny - 1) as f64);
        let j = (fj.round() as usize).clamp(1, self.ny - 2);
        let wy = quad_weights(fj - j as f64);
        let mut acc = 0.0;
        for (dj, w) in wy.into_iter().enumerate() {
            if w != 0.0 {
                acc += w * self.interp_row_quad(&values[j + dj - 1], z_star);
            }
        }
        acc
    }

    /// Three-point Lagrange lookup along one inventory row, with the same
    /// below-grid growth closure as [`Self::interp_known_row`].
    fn interp_row_quad(&self, row: &[f64], z_star: f64) -> f64 {
        if z_star < self.zs[0] {
            return (self.growth_n * (z_star - self.zs[0])).exp() * row[0];
        }
        let fi = ((z_star - self.zs[0]) / self.dz).min((self.nz - 1) as f64);
        let i = (fi.round() as usize).clamp(1, self.nz - 2);
        let w = quad_weights(fi - i as f64);
        w[0] * row[i - 1] + w[1] * row[i] + w[2] * row[i + 1]
    }

    /// Policy evaluation: exact solve of the linear equation for a fixed
    /// sale rule, sweeping inventory rows bottom-up.
    fn evaluate(&self, policies: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let nz = self.nz;
        let mut values: Vec<Vec<f64>> = vec![vec![0.0; nz]; self.ny];

        let d2 = 0.5 * self.sigma2 / (self.dz * self.dz);
        let d1 = self.theta / (2.0 * self.dz);
        // Monotone stencil: central differences while they keep the
        // off-diagonals non-negative, first-order upwind otherwise.
        let (sub_c, diag_c, sup_c) = if d2 >= d1.abs() {
            (d2 - d1, -2.0 * d2, d2 + d1)
        } else if self.theta >= 0.0 {
            (d2, -2.0 * d2 - self.theta / self.dz, d2 + self.theta / self.dz)
        } else {
            (d2 - self.theta / self.dz, -2.0 * d2 + self.theta / self.dz, d2)
        };

        let kb = self.band;
        let mut diag = vec![0.0; nz];
        let mut sup = vec![0.0; nz];
        let mut rhs = vec![0.0; nz];
        let mut low = vec![0.0; nz * kb]; // low[i*kb + (d-1)] = column i−d

        for j in 1..self.ny {
            let y_j = self.ys[j];
            diag.iter_mut().for_each(|v| *v = 0.0);
            sup.iter_mut().for_each(|v| *v = 0.0);
            rhs.iter_mut().for_each(|v| *v = 0.0);
            low.iter_mut().for_each(|v| *v = 0.0);

            // Low-price closure: w_0 = e^{−n·dz} w_1.
            diag[0] = 1.0;
            sup[0] = -(-self.growth_n * self.dz).exp();
            rhs[0] = 0.0;

            for i in 1..nz {
                let l = policies[j][i].clamp(0.0, y_j);
                let far_field = i == nz - 1;
                if far_field {
                    // μ w_z − (δ+γ) w + γ(jump + gain) = 0, backward w_z.
                    diag[i] = self.mu / self.dz - (self.delta + self.gamma);
                    low[i * kb] = -self.mu / self.dz;
                } else {
                    diag[i] = diag_c - (self.delta + self.gamma);
                    low[i * kb] = sub_c;
                    sup[i] = sup_c;
                }
                rhs[i] = -self.gamma * self.gain(self.xs[i], l);

                if l == 0.0 {
                    diag[i] += self.gamma;
                    continue;
                }

                let z_star = self.zs[i] - self.lambda * l;
                let y_star = y_j - l;
                // Unclamped row split: l > 0 keeps y* < y_j, so the upper
                // row is at most j — the row currently being solved.
                let fj = y_star / self.dy;
                let jlo = fj.floor() as usize;
                let ty = fj - jlo as f64;
                // Column split of the jump target, shared by both rows;
                // below the low edge the xⁿ closure maps onto column 0.
                let cols: [(usize, f64); 2] = if z_star < self.zs[0] {
                    [(0, (self.growth_n * (z_star - self.zs[0])).exp()), (0, 0.0)]
                } else {
                    let fi = ((z_star - self.zs[0]) / self.dz).min((nz - 2) as f64);
                    let ilo = fi.floor() as usize;
                    let tz = fi - ilo as f64;
                    [(ilo, 1.0 - tz), (ilo + 1, tz)]
                };

                for (row, wy) in [(jlo, 1.0 - ty), (jlo + 1, ty)] {
                    if wy == 0.0 {
                        continue;
                    }
                    if row < j {
                        rhs[i] -= self.gamma * wy * self.interp_known_row(&values[row], z_star);
                    } else {
                        debug_assert!(row == j, "jump may not increase inventory");
                        for (col, wz) in cols {
                            if wz == 0.0 {
                                continue;
                            }
                            debug_assert!(col <= i, "jump may not look right of the node");
                            let d = i - col;
                            if d == 0 {
                                diag[i] += self.gamma * wy * wz;
                            } else {
                                debug_assert!(d <= kb, "in-row jump outside the band");
                                low[i * kb + (d - 1)] += self.gamma * wy * wz;
                            }
                        }
                    }
                }
            }

            solve_banded(&mut diag, &mut sup, &mut low, &mut rhs, kb, &mut values[j]);
        }
        values
    }

    /// Policy improvement: pointwise maximisation of the jump gain
    /// `w(z − λl, y − l) + gain(z, l)` over `l ∈ [0, y]`.
    ///
    /// The outer loop calls this with `quad: false` so that improvement
    /// and row solves share the bilinear lookup — one operator, one fixed
    /// point, exact termination.  After convergence the reported policy is
    /// re-extracted once with `quad: true`, stripping the first-order
    /// interpolation bias off the hold/sell boundary (a one-shot pass, so
    /// it cannot destabilise the iteration).
    fn improve(&self, values: &[Vec<f64>], quad: bool) -> Vec<Vec<f64>> {
        let mut policies = vec![vec![0.0; self.nz]; self.ny];
        for j in 1..self.ny {
            let y_j = self.ys[j];
            for i in 0..self.nz {
                let (z, x) = (self.zs[i], self.xs[i]);
                let objective = |l: f64| {
                    let target_z = z - self.lambda * l;
                    let target_y = y_j - l;
                    let w = if quad {
                        self.interp_field_quad(values, target_z, target_y)
                    } else {
                        self.interp_field(values, target_z, target_y)
                    };
                    w + self.gain(x, l)
                };
                policies[j][i] = argmax_on_interval(&objective, y_j);
            }
        }
        policies
    }

    fn run(self, tol: f64, max_iters: usize) -> Result<PdeGrid> {
        let mut policies = vec![vec![0.0; self.nz]; self.ny];
        let mut values = vec![vec![0.0; self.nz]; self.ny];
        let mut history = Vec::new();

        for iteration in 1..=max_iters {
            let new_values = self.evaluate(&policies);
            let change = values
                .iter()
                .flatten()
                .zip(new_values.iter().flatten())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            values = new_values;
            history.push(change);

            if iteration > 1 && change <= tol {
                let reported = self.improve(&values, true);
                return Ok(PdeGrid {
                    prices: self.xs,
                    zs: self.zs,
                    inventories: self.ys,
                    values,
                    policies: reported,
                    lambda: self.lambda,
                    iterations: iteration,
                    change_history: history,
                });
            }
            policies = self.improve(&values, false);
        }

        Err(ModelError::NoConvergence {
            iterations: max_iters,
            last_change: *history.last().unwrap(),
            history,
        })
    }
}

/// Banded LU without pivoting for a matrix with `kb` sub-diagonals and one
/// superdiagonal; consumes the bands and writes the solution into `out`.
///
/// Eliminating column `c` only ever touches column `c+1` of the rows below
/// (the pivot row carries a single entry right of the diagonal, and that
/// invariant survives elimination), so the factorisation costs `O(n·kb)`.
fn solve_banded(
    diag: &mut [f64],
    sup: &mut [f64],
    low: &mut [f64],
    rhs: &mut [f64],
    kb: usize,
    out: &mut [f64],
) {
    let n = diag.len();
    for c in 0..n - 1 {
        let piv = diag[c];
        debug_assert!(piv != 0.0, "zero pivot in banded solve");
        let last = (c + kb).min(n - 1);
        for r in c + 1..=last {
            let d = r - c;
            let entry = low[r * kb + (d - 1)];
            if entry == 0.0 {
                continue;
            }
            let f = entry / piv;
            // Column c+1 of row r: the pivot row's superdiagonal lands
            // either on r's own lower band or on its diagonal.
            if d == 1 {
                diag[r] -= f * sup[c];
            } else {
                low[r * kb + (d - 2)] -= f * sup[c];
            }
            rhs[r] -= f * rhs[c];
        }
    }
    out[n - 1] = rhs[n - 1] / diag[n - 1];
    for i in (0..n - 1).rev() {
        out[i] = (rhs[i] - sup[i] * out[i + 1]) / diag[i];
    }
}

/// Three-point Lagrange weights on a uniform stencil `{-1, 0, +1}` for an
/// evaluation point at signed offset `s` from the centre node.
fn quad_weights(s: f64) -> [f64; 3] {
    [0.5 * s * (s - 1.0), 1.0 - s * s, 0.5 * s * (s + 1.0)]
}

/// Maximises a unimodal-ish objective on `[0, hi]`: a 64-point coarse scan
/// brackets the best cell, golden-section search refines it; ties prefer
/// the larger argument, and near-zero winners snap to an exact `0.0`.
pub fn argmax_on_interval(objective: impl Fn(f64) -> f64, hi: f64) -> f64 {
    const COARSE: usize = 64;
    const GOLDEN_ROUNDS: usize = 48;

    if hi <= 0.0 {
        return 0.0;
    }
    let step = hi / COARSE as f64;
    let mut best_k = 0;
    let mut best_v = f64::NEG_INFINITY;
    for k in 0..=COARSE {
        let v = objective(k as f64 * step);
        if v >= best_v {
            best_v = v;
            best_k = k;
        }
    }
    let mut a = step * best_k.saturating_sub(1) as f64;
    let mut b = (step * (best_k + 1) as f64).min(hi);

    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let mut fc = objective(c);
    let mut fd = objective(d);
    for _ in 0..GOLDEN_ROUNDS {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = objective(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = objective(d);
        }
    }
    let mid = 0.5 * (a + b);
    let l = if objective(mid) >= best_v { mid } else { step * best_k as f64 };
    if l <= 1e-10 * hi {
        0.0
    } else {
        l
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::derive_constants;
    use crate::params::ModelParams;
    use crate::state::MarketState;
    use crate::value::value;

    #[test]
    fn banded_solver_matches_dense_elimination() {
        // A small asymmetric banded system with a known solution.
        let n = 6;
        let kb = 2;
        let mut diag = vec![4.0, 5.0, 6.0, 5.0, 4.0, 3.0];
        let mut sup = vec![1.0, -1.0, 0.5, 1.0, -0.5, 0.0];
        let mut low = vec![0.0; n * kb];
        low[1 * kb] = 1.0;
        low[2 * kb] = -2.0;
        low[2 * kb + 1] = 0.5;
        low[4 * kb + 1] = 1.5;
        low[5 * kb] = -1.0;
        let x_true = [1.0, -2.0, 3.0, -4.0, 5.0, -6.0];

        // rhs = A·x_true, assembled from the same band layout.
        let mut rhs = vec![0.0; n];
        for i in 0..n {
            rhs[i] += diag[i] * x_true[i];
            if i + 1 < n {
                rhs[i] += sup[i] * x_true[i + 1];
            }
            for dd in 1..=kb.min(i) {
                rhs[i] += low[i * kb + dd - 1] * x_true[i - dd];
            }
        }
        let mut out = vec![0.0; n];
        solve_banded(&mut diag, &mut sup, &mut low, &mut rhs, kb, &mut out);
        for (got, want) in out.iter().zip(x_true.iter()) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
    }

    #[test]
    fn coarse_solve_tracks_closed_form() {
        let constants = derive_constants(&ModelParams::default_market()).unwrap();
        let spec = PdeGridSpec {
            n_price: 101,
            n_inventory: 21,
            y_max: 20.0,
            span: 8.0,
        };
        let grid =
            pde_solve(&constants, &spec, DEFAULT_TOLERANCE, DEFAULT_MAX_ITERATIONS).unwrap();
        let mut worst = 0.0f64;
        for j in 1..grid.inventories.len() {
            for i in 5..grid.prices.len() - 5 {
                let exact = value(
                    &constants,
                    &MarketState::new(grid.prices[i], grid.inventories[j]),
                );
                let err = (grid.values[j][i] - exact).abs() / (1.0 + exact.abs());
                worst = worst.max(err);
            }
        }
        assert!(worst < 0.02, "coarse-grid deviation {worst}");
    }

    #[test]
    fn rejects_degenerate_grids() {
        let constants = derive_constants(&ModelParams::default_market()).unwrap();
        let spec = PdeGridSpec {
            n_price: 4,
            n_inventory: 2,
            y_max: 10.0,
            span: 8.0,
        };
        assert!(matches!(
            pde_solve(&constants, &spec, DEFAULT_TOLERANCE, DEFAULT_MAX_ITERATIONS),
            Err(ModelError::InvalidConfig(_))
        ));
        let fine = PdeGridSpec::default();
        assert!(matches!(
            pde_solve(&constants, &fine, 0.0, 10),
            Err(ModelError::InvalidConfig(_))
        ));
    }
}
