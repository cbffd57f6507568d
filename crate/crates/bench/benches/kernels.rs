use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use forge_bench::{forged_fixture, hubbard};
use forge_core::fermion::build_pool;
use forge_core::forge::Engine;
use forge_core::oracle::ground_state;
use forge_core::ForgeOptions;

fn statevector(c: &mut Criterion) {
    for sites in [4, 6] {
        let (h, basis) = hubbard(sites);
        let psi = ground_state(&h, &basis).unwrap().state().unwrap();
        let pool = build_pool(h.modes(), None).unwrap();
        let gen = pool[pool.len() / 2];
        c.bench_function(&format!("apply_excitation/{sites}"), |b| {
            b.iter(|| black_box(&psi).apply_excitation(&gen, 0.3).unwrap())
        });
        c.bench_function(&format!("hamiltonian_apply/{sites}"), |b| {
            b.iter(|| h.apply(black_box(&psi)).unwrap())
        });
    }
}

fn oracle(c: &mut Criterion) {
    for sites in [4, 6] {
        let (h, basis) = hubbard(sites);
        c.bench_function(&format!("ground_state/{sites}"), |b| {
            b.iter(|| ground_state(&h, black_box(&basis)).unwrap())
        });
    }
}

fn forged(c: &mut Criterion) {
    let (h, g, st) = forged_fixture();
    let engine = Engine::new(&h, g, st.clone(), ForgeOptions::edef()).unwrap();
    c.bench_function("forged_evaluate", |b| {
        b.iter(|| engine.evaluate(black_box(&st)).unwrap())
    });
    let ev = engine.evaluate(&st).unwrap();
    c.bench_function("forged_gradient", |b| {
        b.iter(|| engine.gradient(black_box(&st), &ev).unwrap())
    });
}

criterion_group!(benches, statevector, oracle, forged);
criterion_main!(benches);
