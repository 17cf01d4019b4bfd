// Copyright 2026 The posqsd Authors
// SPDX-License-Identifier: Apache-2.0

use criterion::{criterion_group, criterion_main, Criterion};
use posqsd::matrix::hermitian_eigendecomposition;
use posqsd::rng::stream;
use posqsd::unraveling::increments_per_step;
use posqsd::{build_gtro, decompose_gtro, run_ensemble, sde_step, AbortPolicy, SdeConfig, UnravelingMode, WienerIncrementBlock};
use posqsd_bench::{full_dimer, qubit, random_state};
use std::hint::black_box;

fn step(c: &mut Criterion) {
    let gen = full_dimer();
    let psi = random_state(3, 7);
    let mut rng = stream(1, 0);
    for mode in [UnravelingMode::Gtro, UnravelingMode::StandardQsd] {
        let noise = WienerIncrementBlock::sample(1e-4, increments_per_step(&gen, mode), &mut rng);
        c.bench_function(&format!("sde_step/dimer/{mode}"), |b| {
            b.iter(|| sde_step(black_box(&gen), black_box(&psi), 1e-4, &noise, mode).unwrap())
        });
    }
}

fn gtro(c: &mut Criterion) {
    let gen = full_dimer();
    let psi = random_state(3, 7);
    let w = build_gtro(&gen, &psi).unwrap();
    c.bench_function("gtro/build/dimer", |b| b.iter(|| build_gtro(black_box(&gen), black_box(&psi)).unwrap()));
    c.bench_function("gtro/decompose/dimer", |b| b.iter(|| decompose_gtro(black_box(&w), black_box(&psi)).unwrap()));
    c.bench_function("eigen/hermitian_3x3", |b| b.iter(|| hermitian_eigendecomposition(black_box(&w)).unwrap()));
}

fn ensemble(c: &mut Criterion) {
    let gen = qubit();
    let psi = random_state(2, 3);
    let cfg = SdeConfig::new(1e-3, 0.1, UnravelingMode::Gtro, 5).with_stride(10);
    let mut group = c.benchmark_group("ensemble");
    group.sample_size(10);
    group.bench_function("qubit/64x100", |b| {
        b.iter(|| run_ensemble(&gen, &psi, &cfg, 64, 1, AbortPolicy::Fail).unwrap())
    });
    group.finish();
}

criterion_group!(benches, step, gtro, ensemble);
criterion_main!(benches);
