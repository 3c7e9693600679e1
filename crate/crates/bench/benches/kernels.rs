//! Benchmarks for the three dominant kernels: per-mode operator assembly
//! plus eigensolve, nonlinear forcing evaluation (FFT products), and a full
//! implicit time step.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use num_complex::Complex64 as C;

use rtwave_bench::fixture;
use rtwave_core::geometry::{build_theta, VandermondeCoeffs};
use rtwave_core::sim::{nonlinear_terms, FlattenedState, Scheme, Stepper};
use rtwave_core::spectral::fft::HorizontalTransform;
use rtwave_core::stability::{assemble_mode_operator, growth_rate};

fn bench_mode_eigensolve(c: &mut Criterion) {
    let mut group = c.benchmark_group("mode_assembly_and_eigensolve");
    group.sample_size(10);
    for n_v in [16usize, 32] {
        let (profile, params, grid) = fixture(n_v);
        group.bench_with_input(BenchmarkId::from_parameter(n_v), &n_v, |b, _| {
            b.iter(|| {
                let op = assemble_mode_operator(1, 0, &profile, &params, &grid).unwrap();
                growth_rate(&op).unwrap().lambda_max
            })
        });
    }
    group.finish();
}

fn bench_nonlinear_forcing(c: &mut Criterion) {
    let mut group = c.benchmark_group("nonlinear_forcing");
    group.sample_size(20);
    for n_v in [12usize, 24] {
        let (profile, params, grid) = fixture(n_v);
        let transform = HorizontalTransform::new(&grid);
        let vand = VandermondeCoeffs::default_order();
        let mut state = FlattenedState::zeros(&grid);
        state
            .eta_minus
            .add_real_mode(&grid, 1, 0, C::new(1e-3, 0.0));
        state
            .eta_plus
            .add_real_mode(&grid, 1, 1, C::new(5e-4, 0.0));
        let fields = build_theta(&state.eta_plus, &state.eta_minus, &grid, &transform).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n_v), &n_v, |b, _| {
            b.iter(|| {
                nonlinear_terms(
                    &state, &fields, &profile, &params, &grid, &transform, &vand, None,
                )
                .unwrap()
            })
        });
    }
    group.finish();
}

fn bench_time_step(c: &mut Criterion) {
    let mut group = c.benchmark_group("time_step");
    group.sample_size(10);
    for scheme in [Scheme::Imex1, Scheme::Imex2] {
        let (profile, params, grid) = fixture(12);
        let mut stepper =
            Stepper::new(scheme, 0.01, 1000.0, &profile, &params, &grid).unwrap();
        let mut state = FlattenedState::zeros(&grid);
        state
            .eta_minus
            .add_real_mode(&grid, 1, 0, C::new(1e-3, 0.0));
        state = stepper.step(&state).unwrap();
        group.bench_with_input(
            BenchmarkId::from_parameter(format!("{scheme:?}")),
            &scheme,
            |b, _| b.iter(|| stepper.step(&state).unwrap()),
        );
    }
    group.finish();
}

criterion_group!(
    benches,
    bench_mode_eigensolve,
    bench_nonlinear_forcing,
    bench_time_step
);
criterion_main!(benches);
