//! Parallel against sequential evaluation of the adaptive quadrature.
//!
//! `sequential` pins one worker; `parallel` uses the global pool (and is the
//! same code path as `sequential` when built without the `parallel` feature).

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use willmore_core::functionals::{crude_balance, willmore_energy, MonotonicityInputs};
use willmore_core::library::corpus_item;
use willmore_core::quadrature::with_threads;
use willmore_core::QuadratureSpec;

fn bench(c: &mut Criterion) {
    let spec = corpus_item("perturbed_h3").unwrap().spec;
    let mut group = c.benchmark_group("quadrature");
    group.sample_size(10);
    for cells in [8, 16] {
        let surface = spec.build_with(QuadratureSpec::default().with_cells(cells)).unwrap();
        let o = spec.base_point(&surface).unwrap();
        let inputs = MonotonicityInputs::new(o, 0.3, 1.5);
        for (mode, threads) in [("sequential", 1), ("parallel", 0)] {
            group.bench_with_input(BenchmarkId::new(format!("willmore_energy/{mode}"), cells), &cells, |b, _| {
                b.iter(|| with_threads(threads, || willmore_energy(black_box(&surface)).unwrap()))
            });
            group.bench_with_input(BenchmarkId::new(format!("crude_balance/{mode}"), cells), &cells, |b, _| {
                b.iter(|| with_threads(threads, || crude_balance(black_box(&surface), black_box(&inputs)).unwrap()))
            });
        }
    }
    group.finish();
}

criterion_group!(benches, bench);
criterion_main!(benches);
