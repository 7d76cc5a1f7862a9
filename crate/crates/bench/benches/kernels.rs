use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use emeter_core::interferometer::{default_phase_grid, fit_fringe, run_exact};
use emeter_core::protocols::mutual_predictability::{mutual_predictability_protocol, Pairing};
use emeter_core::protocols::{linear_entropy_protocol, negativity_protocol_pure, RunSettings};
use emeter_core::qmat::eigh;
use emeter_core::states::{
    make_isotropic, make_pure_schmidt, random_hermitian, random_pure, random_schmidt,
    random_unitary,
};

fn linear_algebra(c: &mut Criterion) {
    for n in [9, 25, 36] {
        let h = random_hermitian(n, 1);
        c.bench_function(&format!("eigh/{n}"), |b| {
            b.iter(|| eigh(black_box(&h)).unwrap())
        });
    }
}

fn interferometer(c: &mut Criterion) {
    let rho = random_pure(3, 2).unwrap();
    let u = random_unitary(9, 3);
    let grid = default_phase_grid(16);
    c.bench_function("run_exact/d3", |b| {
        b.iter(|| run_exact(black_box(&rho), &u, &grid).unwrap())
    });
    let pattern = run_exact(&rho, &u, &grid).unwrap();
    c.bench_function("fit_fringe/16", |b| {
        b.iter(|| fit_fringe(black_box(&pattern)).unwrap())
    });
}

fn protocols(c: &mut Criterion) {
    let exact = RunSettings::exact();
    let sampled = RunSettings::sampled(100_000, 4);
    let (psi, shape) = make_pure_schmidt(&random_schmidt(4, 5).unwrap());
    c.bench_function("linear_entropy/d4/exact", |b| {
        b.iter(|| linear_entropy_protocol(&psi, shape, &exact).unwrap())
    });
    c.bench_function("linear_entropy/d4/sampled", |b| {
        b.iter(|| linear_entropy_protocol(&psi, shape, &sampled).unwrap())
    });
    c.bench_function("negativity/d4/exact", |b| {
        b.iter(|| negativity_protocol_pure(&psi, shape, &exact).unwrap())
    });
    let iso = make_isotropic(3, 0.5).unwrap();
    c.bench_function("mutual_predictability/d3/m4", |b| {
        b.iter(|| mutual_predictability_protocol(&iso, 3, 4, Pairing::Conjugate, &exact).unwrap())
    });
}

criterion_group!(benches, linear_algebra, interferometer, protocols);
criterion_main!(benches);
