//! Benchmarks for the three hot paths: closed-form surface evaluation,
//! Monte Carlo episode batches, and the policy-iteration grid solver.

use criterion::{black_box, criterion_group, criterion_main, Criterion, Throughput};
use optexec_core::{
    barrier_policy, derive_constants, estimate_value, pde_solve, run_episode, value_jet,
    EpisodeConfig, MarketState, ModelParams, PdeGridSpec, DEFAULT_MAX_ITERATIONS,
    DEFAULT_TOLERANCE,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn bench_value_surface(c: &mut Criterion) {
    let constants = derive_constants(&ModelParams::default_market()).unwrap();
    let states: Vec<MarketState> = (0..40)
        .flat_map(|i| {
            (0..40).map(move |j| {
                let x = 0.1 * 1.2f64.powi(i);
                let y = 0.5 * 1.18f64.powi(j);
                MarketState::new(x, y)
            })
        })
        .collect();
    let mut group = c.benchmark_group("value");
    group.throughput(Throughput::Elements(states.len() as u64));
    group.bench_function("jet_40x40_grid", |b| {
        b.iter(|| {
            let mut acc = 0.0;
            for s in &states {
                acc += value_jet(&constants, black_box(s)).value;
            }
            black_box(acc)
        })
    });
    group.finish();
}

fn bench_monte_carlo(c: &mut Criterion) {
    let p = ModelParams::default_market();
    let constants = derive_constants(&p).unwrap();
    let policy = barrier_policy(&constants);
    let config = EpisodeConfig::new(MarketState::new(1.0, 100.0), 200.0);

    let mut group = c.benchmark_group("monte_carlo");
    group.bench_function("single_episode", |b| {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        b.iter(|| black_box(run_episode(&p, &policy, &config, &mut rng).payoff))
    });
    group.throughput(Throughput::Elements(256));
    group.bench_function("estimate_256_paths", |b| {
        b.iter(|| black_box(estimate_value(&p, &policy, &config, 256, 42).mean))
    });
    group.finish();
}

fn bench_grid_solver(c: &mut Criterion) {
    let constants = derive_constants(&ModelParams::default_market()).unwrap();
    let spec = PdeGridSpec {
        n_price: 80,
        n_inventory: 12,
        y_max: 30.0,
        span: 8.0,
    };
    c.bench_function("pde_solve_80x12", |b| {
        b.iter(|| {
            let grid =
                pde_solve(&constants, &spec, DEFAULT_TOLERANCE, DEFAULT_MAX_ITERATIONS).unwrap();
            black_box(grid.iterations)
        })
    });
}

criterion_group!(benches, bench_value_surface, bench_monte_carlo, bench_grid_solver);
criterion_main!(benches);
