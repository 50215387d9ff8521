use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use fracflow::integrator::{step, SimState, StepPolicy};
use fracflow::operators::{QuadratureParams, SingularQuadrature};
use fracflow::ModelParams;
use fracflow_bench::smooth_field;

fn fft(c: &mut Criterion) {
    let mut g = c.benchmark_group("fft_roundtrip");
    for n in [64, 128, 256] {
        let f = smooth_field(n);
        g.bench_with_input(BenchmarkId::from_parameter(n), &f, |b, f| {
            b.iter(|| {
                let grid = f.grid();
                black_box(grid.inverse(grid.forward(f.values())))
            })
        });
    }
    g.finish();
}

fn solver_step(c: &mut Criterion) {
    let params = ModelParams::new(2, 0.5, 1.0, 0.1).unwrap();
    let policy = StepPolicy::default();
    let mut g = c.benchmark_group("solver_step");
    for n in [64, 128] {
        let state = SimState::new(smooth_field(n));
        g.bench_with_input(BenchmarkId::from_parameter(n), &state, |b, s| {
            b.iter(|| black_box(step(s, &params, &policy, 1e-3).unwrap()))
        });
    }
    g.finish();
}

fn d_gamma(c: &mut Criterion) {
    let f = smooth_field(32);
    let quad = SingularQuadrature::new(f.grid(), 1.0, QuadratureParams::default_for(f.grid())).unwrap();
    c.bench_function("d_gamma_point_32", |b| b.iter(|| black_box(quad.d_gamma_at(&f, 17).unwrap())));
}

criterion_group!(benches, fft, solver_step, d_gamma);
criterion_main!(benches);
