use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use sinesch_core::diffusion::{sample_sch_count, simulate_phase, DriftSpec, RngSeed};
use sinesch_core::variational::solve_sine;
use sinesch_core::Density;

fn variational(c: &mut Criterion) {
    let mut g = c.benchmark_group("solve_sine");
    g.sample_size(20);
    for n in [500, 2000] {
        let r = Density::new(0.3).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| b.iter(|| solve_sine(black_box(r), 2.0, n)));
    }
    g.finish();
}

fn paths(c: &mut Criterion) {
    let mut g = c.benchmark_group("path");
    // 10⁴ Euler steps each.
    let drift = DriftSpec::constant(10.0).unwrap();
    g.bench_function("phase_10k_steps", |b| b.iter(|| simulate_phase(drift, 1.0, 1e-4, RngSeed::new(1, black_box(0)))));
    g.bench_function("sch_count_10k_steps", |b| {
        b.iter(|| sample_sch_count(10.0, 1.0, Some(1e-4), RngSeed::new(1, black_box(0))))
    });
    g.finish();
}

criterion_group!(benches, variational, paths);
criterion_main!(benches);
