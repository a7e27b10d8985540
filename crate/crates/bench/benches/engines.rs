//! Benchmarks of the hot paths: basis construction and rate-system
//! derivation, both integration representations, and a single unraveled
//! trajectory.

use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use subspace_sim::{
    build_model, derive_rate_system, expectations_of, gell_mann_basis, integrate_master_equation,
    integrate_rate_system, run_trajectory, uniform_grid, DensityMatrix, ModelKind, ModelParams,
    SolverOptions, StateVector,
};

fn four_level(gamma: f64) -> subspace_sim::LevelScheme {
    build_model(
        ModelKind::FourLevelChain,
        ModelParams::new(1.0, 10.0, gamma).unwrap(),
    )
    .unwrap()
}

fn bench_basis_and_derivation(c: &mut Criterion) {
    c.bench_function("gell_mann_basis_d4", |b| {
        b.iter(|| black_box(gell_mann_basis(black_box(4)).unwrap()))
    });
    let scheme = four_level(10.0);
    c.bench_function("derive_rate_system_four_level", |b| {
        b.iter(|| black_box(derive_rate_system(black_box(&scheme), true).unwrap()))
    });
}

fn bench_integrators(c: &mut Criterion) {
    let scheme = four_level(10.0);
    let grid = uniform_grid(20.0, 2000);
    let rho0 = DensityMatrix::pure(4, 0);
    c.bench_function("master_equation_four_level_t20", |b| {
        b.iter(|| {
            black_box(
                integrate_master_equation(&scheme, &rho0, &grid, SolverOptions::default()).unwrap(),
            )
        })
    });
    let rs = derive_rate_system(&scheme, true).unwrap();
    let init = expectations_of(&rho0, &rs);
    c.bench_function("rate_system_four_level_t20", |b| {
        b.iter(|| {
            black_box(integrate_rate_system(&rs, &init, &grid, SolverOptions::default()).unwrap())
        })
    });
}

fn bench_trajectory(c: &mut Criterion) {
    let scheme = build_model(
        ModelKind::ThreeLevelChain,
        ModelParams::new(1.0, 10.0, 10.0).unwrap(),
    )
    .unwrap();
    let psi0 = StateVector::basis_state(3, 0);
    c.bench_function("trajectory_three_level_t100", |b| {
        let mut seed = 0u64;
        b.iter(|| {
            seed += 1;
            black_box(
                run_trajectory(
                    &scheme,
                    &psi0,
                    100.0,
                    seed,
                    &[],
                    SolverOptions::with_tolerances(1e-6, 1e-9),
                )
                .unwrap(),
            )
        })
    });
}

criterion_group!(
    benches,
    bench_basis_and_derivation,
    bench_integrators,
    bench_trajectory
);
criterion_main!(benches);
