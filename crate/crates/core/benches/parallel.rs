//! One worker versus the ambient pool on the hot paths.
//!
//! Run with `--no-default-features` to measure the sequential build; both
//! variants then execute the same single-threaded code.

use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use droidtriage_core::dataset::{synthesize, SyntheticSpec};
use droidtriage_core::ensemble::{train_forest, ForestParams};
use droidtriage_core::eval::cross_validate;
use droidtriage_core::par;
use droidtriage_core::ranking::rank_features;
use droidtriage_core::{AlgoDescriptor, Dataset, FeatureCatalog};

fn corpus() -> Dataset {
    let catalog = Arc::new(FeatureCatalog::default_catalog());
    let spec = SyntheticSpec::calibrated(&catalog).unwrap();
    synthesize(catalog, &spec, 42).unwrap()
}

/// One worker, then the ambient pool size (at least two threads).
fn worker_counts() -> [usize; 2] {
    [1, par::current_workers().max(2)]
}

fn bench(c: &mut Criterion) {
    let data = corpus();
    let forest = ForestParams::with_defaults(data.n_features(), 7);
    let nb = AlgoDescriptor::default_for("nb", 0).unwrap();
    let dt = AlgoDescriptor::default_for("dt", 0).unwrap();

    let mut group = c.benchmark_group("hot_paths");
    group.sample_size(10);
    // Pool construction sits inside the timed closure; it is small next to
    // any of these workloads.
    for workers in worker_counts() {
        group.bench_function(BenchmarkId::new("train_forest", workers), |b| {
            b.iter(|| par::with_workers(workers, || train_forest(&data, &forest).unwrap()))
        });
        group.bench_function(BenchmarkId::new("rank_features", workers), |b| {
            b.iter(|| par::with_workers(workers, || rank_features(&data).unwrap()))
        });
        group.bench_function(BenchmarkId::new("cv10_nb", workers), |b| {
            b.iter(|| par::with_workers(workers, || cross_validate(&data, &nb, 10, 1).unwrap()))
        });
        group.bench_function(BenchmarkId::new("cv10_dt", workers), |b| {
            b.iter(|| par::with_workers(workers, || cross_validate(&data, &dt, 10, 1).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, bench);
criterion_main!(benches);
