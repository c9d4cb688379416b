//! Sequential versus rayon execution of the crate's data-parallel loops.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use pmu_events::eval::{leave_one_out, stratified_subsample, Method, MethodConfig};
use pmu_events::exec::Exec;
use pmu_events::pca_svm::record_eigenvalues;
use pmu_events::synth::{build_dataset, GeneratorConfig};

const STRATEGIES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn dataset(c: &mut Criterion) {
    let mut g = c.benchmark_group("build_dataset");
    for sps in [60u32, 120] {
        let cfg = GeneratorConfig::default().with_sps(sps);
        for (name, exec) in STRATEGIES {
            g.bench_with_input(BenchmarkId::new(name, sps), &cfg, |b, cfg| {
                b.iter(|| build_dataset(black_box(cfg), exec).unwrap())
            });
        }
    }
    g.finish();
}

fn eigenvalues(c: &mut Criterion) {
    let ds = build_dataset(&GeneratorConfig::default(), Exec::Parallel).unwrap();
    let mut g = c.benchmark_group("eigenvalues_450");
    for (name, exec) in STRATEGIES {
        g.bench_function(name, |b| {
            b.iter(|| exec.try_map(&ds.records, |r| record_eigenvalues(black_box(r), 6)).unwrap())
        });
    }
    g.finish();
}

fn loo(c: &mut Criterion) {
    let full = build_dataset(&GeneratorConfig::default(), Exec::Parallel).unwrap();
    let ds = stratified_subsample(&full, 10, 0).unwrap();
    let mut cfg = MethodConfig::default();
    cfg.ae_softmax.hidden = 10;
    cfg.ae_softmax.train.epochs_ae = 10;
    cfg.ae_softmax.train.epochs_softmax = 10;
    let mut g = c.benchmark_group("loo_30");
    g.sample_size(10);
    for method in Method::ALL {
        for (name, exec) in STRATEGIES {
            g.bench_function(BenchmarkId::new(name, method), |b| {
                b.iter(|| leave_one_out(black_box(&ds), method, &cfg, 0, exec).unwrap())
            });
        }
    }
    g.finish();
}

criterion_group!(benches, dataset, eigenvalues, loo);
criterion_main!(benches);
