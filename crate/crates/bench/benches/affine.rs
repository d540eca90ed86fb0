use std::hint::black_box;

use aro_core::adjustable::solve_adjustable;
use aro_core::affine::solve_optimal_affine;
use aro_core::fastaffine::solve_fast_affine;
use aro_core::instances::{gen_lot_sizing, generate, Family, GenSpec};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn affine_vs_fast(c: &mut Criterion) {
    let mut g = c.benchmark_group("affine_vs_fast");
    g.sample_size(10);
    for family in [Family::GaussianU1, Family::GaussianU2] {
        for m in [10, 20] {
            let (inst, u) = generate(&GenSpec::new(family, m, 0)).unwrap();
            let id = format!("{family}/{m}");
            g.bench_with_input(BenchmarkId::new("optimal", &id), &(&inst, &u), |b, (i, u)| {
                b.iter(|| black_box(solve_optimal_affine(i, u).unwrap().objective))
            });
            g.bench_with_input(BenchmarkId::new("fast", &id), &(&inst, &u), |b, (i, u)| {
                b.iter(|| black_box(solve_fast_affine(i, u).unwrap().objective))
            });
        }
    }
    g.finish();
}

fn adjustable_lot_sizing(c: &mut Criterion) {
    let mut g = c.benchmark_group("adjustable_lot_sizing");
    g.sample_size(10);
    for m in [6, 10] {
        let (inst, u) = gen_lot_sizing(m).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(m), &(&inst, &u), |b, (i, u)| {
            b.iter(|| black_box(solve_adjustable(i, u).unwrap().objective))
        });
    }
    g.finish();
}

criterion_group!(benches, affine_vs_fast, adjustable_lot_sizing);
criterion_main!(benches);
