//! Timings for the gamma engine, the level-2/3 recursion and the effect of
//! reusing tabulated inner levels across evaluations at fixed rapidities.

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use num_complex::Complex64;
use relcm_bench::{c64, evaluator};
use relcm_core::gamma::GammaEngine;
use relcm_core::params::Params;

fn bench_gamma(c: &mut Criterion) {
    let g = GammaEngine::new(Params::new(1.0, 0.8).unwrap());
    c.bench_function("ln_gamma interior", |bench| {
        bench.iter(|| g.ln_gamma(Complex64::new(1.7, 0.3)).unwrap())
    });
    c.bench_function("ln_gamma far real argument", |bench| {
        bench.iter(|| g.ln_gamma(Complex64::new(24.0, 0.9)).unwrap())
    });
}

fn bench_levels(c: &mut Criterion) {
    let x2 = [c64(0.4, 0.0), c64(-0.3, 0.0)];
    let y2 = [0.9, -0.9];
    c.bench_function("E_2 evaluation (tol 1e-8)", |bench| {
        bench.iter_batched(
            || evaluator(1e-8, true),
            |ev| ev.e(&x2, &y2).unwrap(),
            BatchSize::PerIteration,
        )
    });
    let x3 = [c64(0.31, 0.0), c64(-0.24, 0.0), c64(0.07, 0.0)];
    let y3 = [0.5, 0.05, -0.45];
    c.bench_function("E_3 evaluation (tol 1e-6)", |bench| {
        bench.iter_batched(
            || evaluator(1e-6, true),
            |ev| ev.e(&x3, &y3).unwrap(),
            BatchSize::PerIteration,
        )
    });
}

/// Three level-3 evaluations at fixed rapidities: with the table cache the
/// inner tabulation is built once, without it three times.
fn bench_table_reuse(c: &mut Criterion) {
    let y3 = [0.5, 0.05, -0.45];
    let xs = [
        [c64(0.31, 0.0), c64(-0.24, 0.0), c64(0.07, 0.0)],
        [c64(0.11, 0.0), c64(-0.31, 0.0), c64(0.27, 0.0)],
        [c64(0.05, 0.0), c64(-0.18, 0.0), c64(0.33, 0.0)],
    ];
    let mut group = c.benchmark_group("inner-table reuse x3 evals");
    group.sample_size(10);
    group.bench_function("cached", |bench| {
        bench.iter_batched(
            || evaluator(1e-6, true),
            |ev| {
                for x in &xs {
                    ev.e(x, &y3).unwrap();
                }
            },
            BatchSize::PerIteration,
        )
    });
    group.bench_function("uncached", |bench| {
        bench.iter_batched(
            || evaluator(1e-6, false),
            |ev| {
                for x in &xs {
                    ev.e(x, &y3).unwrap();
                }
            },
            BatchSize::PerIteration,
        )
    });
    group.finish();
}

criterion_group!(benches, bench_gamma, bench_levels, bench_table_reuse);
criterion_main!(benches);
