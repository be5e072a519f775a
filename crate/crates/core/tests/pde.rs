//! Grid-solver checks: convergence under refinement, free-boundary
//! placement, structural invariants of the solved field, and failure
//! reporting.

mod common;

use optexec_core::{
    derive_constants, pde_solve, value, DerivedConstants, MarketState, ModelError, ModelParams,
    PdeGridSpec, DEFAULT_MAX_ITERATIONS, DEFAULT_TOLERANCE,
};

fn constants() -> DerivedConstants {
    derive_constants(&ModelParams::default_market()).unwrap()
}

fn max_interior_rel_error(
    c: &DerivedConstants,
    grid: &optexec_core::PdeGrid,
    stride: usize,
    n_price_coarse: usize,
    n_inv_coarse: usize,
) -> f64 {
    let mut worst: f64 = 0.0;
    for j in 1..n_inv_coarse {
        for i in 5..n_price_coarse - 5 {
            let (fi, fj) = (stride * i, stride * j);
            let s = MarketState::new(grid.prices[fi], grid.inventories[fj]);
            let v = value(c, &s);
            worst = worst.max((grid.values[fj][fi] - v).abs() / (1.0 + v.abs()));
        }
    }
    worst
}

/// Halving both mesh widths shrinks the worst interior error by a clear
/// factor, measured at the *same* physical nodes.
#[test]
fn refinement_reduces_the_interior_error() {
    let c = constants();
    let coarse_spec = PdeGridSpec { n_price: 101, n_inventory: 21, y_max: 20.0, span: 8.0 };
    let fine_spec = PdeGridSpec { n_price: 201, n_inventory: 41, ..coarse_spec };
    let coarse = pde_solve(&c, &coarse_spec, DEFAULT_TOLERANCE, DEFAULT_MAX_ITERATIONS).unwrap();
    let fine = pde_solve(&c, &fine_spec, DEFAULT_TOLERANCE, DEFAULT_MAX_ITERATIONS).unwrap();

    // The refined grid shares every other node with the coarse one.
    assert!((fine.zs[2] - coarse.zs[1]).abs() < 1e-12);
    assert!((fine.inventories[2] - coarse.inventories[1]).abs() < 1e-12);

    let err_coarse = max_interior_rel_error(&c, &coarse, 1, 101, 21);
    let err_fine = max_interior_rel_error(&c, &fine, 2, 101, 21);
    assert!(
        err_coarse >= 1.5 * err_fine,
        "refinement ratio {:.2} (coarse {err_coarse:.3e}, fine {err_fine:.3e})",
        err_coarse / err_fine
    );
}

/// The numerical free boundary — the first price at which the converged
/// rule sells — sits within one price cell of the closed-form barrier at
/// every inventory level.
#[test]
fn free_boundary_tracks_the_closed_form_barrier() {
    let c = constants();
    let spec = PdeGridSpec { n_price: 200, n_inventory: 40, y_max: 100.0, span: 8.0 };
    let grid = pde_solve(&c, &spec, DEFAULT_TOLERANCE, DEFAULT_MAX_ITERATIONS).unwrap();
    let dz = grid.dz();
    let curve = grid.switch_curve();
    assert!(!curve.is_empty());
    for (y, price) in curve {
        let offset = (price.ln() - c.barrier.ln()).abs();
        assert!(
            offset <= dz * (1.0 + 1e-9),
            "boundary off by {:.2} cells at y = {y}",
            offset / dz
        );
    }
}

/// Structural invariants of a solved field: the no-inventory row is
/// identically zero, values are nonnegative and nondecreasing in
/// inventory, and the sale rule is feasible everywhere.
#[test]
fn solved_field_satisfies_structural_invariants() {
    let c = constants();
    let spec = PdeGridSpec { n_price: 80, n_inventory: 12, y_max: 30.0, span: 8.0 };
    let grid = pde_solve(&c, &spec, DEFAULT_TOLERANCE, DEFAULT_MAX_ITERATIONS).unwrap();

    assert!(grid.values[0].iter().all(|&v| v == 0.0), "y = 0 row not exactly zero");
    assert!(grid.policies[0].iter().all(|&l| l == 0.0));
    for j in 0..spec.n_inventory {
        for i in 0..spec.n_price {
            let v = grid.values[j][i];
            assert!(v >= 0.0, "negative value at ({i}, {j})");
            if j > 0 {
                assert!(
                    v + 1e-12 * (1.0 + v) >= grid.values[j - 1][i],
                    "value decreasing in inventory at ({i}, {j})"
                );
                let l = grid.policies[j][i];
                assert!(
                    (0.0..=grid.inventories[j] + 1e-12).contains(&l),
                    "infeasible sale {l} at ({i}, {j})"
                );
            }
        }
    }
    assert!(grid.iterations >= 1);
    assert_eq!(grid.change_history.len(), grid.iterations);
    // Interpolation reproduces nodal values (up to the ln∘exp round trip
    // on the price coordinate).
    let (i, j) = (40, 6);
    let v = grid.value_at(grid.prices[i], grid.inventories[j]);
    let node = grid.values[j][i];
    assert!((v - node).abs() <= 1e-12 * (1.0 + node.abs()));
}

/// An unreachable iteration cap fails loudly and carries the convergence
/// history; degenerate tolerances are rejected up front.
#[test]
fn failure_modes_are_reported() {
    let c = constants();
    let spec = PdeGridSpec { n_price: 120, n_inventory: 16, y_max: 40.0, span: 8.0 };
    match pde_solve(&c, &spec, 1e-14, 2) {
        Err(ModelError::NoConvergence { iterations, last_change, history }) => {
            assert_eq!(iterations, 2);
            assert_eq!(history.len(), 2);
            assert!(last_change > 1e-14);
        }
        other => panic!("expected NoConvergence, got {other:?}"),
    }
    assert!(matches!(
        pde_solve(&c, &spec, 0.0, 10),
        Err(ModelError::InvalidConfig(_))
    ));
    assert!(matches!(
        pde_solve(&c, &spec, 1e-10, 0),
        Err(ModelError::InvalidConfig(_))
    ));
}
