use bbfnn_bench::{bench_ranges, uniform_matrix};
use bbfnn_core::{
    assemble_hidden_matrix, pseudo_inverse, train, ModelConfig, ModelKind, TaskKind, UntrainedModel,
};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

fn config(kind: ModelKind, k: usize, n: usize) -> ModelConfig {
    let ranges = matches!(kind, ModelKind::ElmBbfnn | ModelKind::RecElmBbfnn).then(bench_ranges);
    let mut cfg = ModelConfig::for_kind(kind, k, n, 1, ranges, 7);
    cfg.rec_spectral_radius = 0.5;
    cfg
}

fn pinv(c: &mut Criterion) {
    let mut group = c.benchmark_group("pseudo_inverse");
    for (m, n) in [(200, 20), (1000, 50), (4000, 80)] {
        let a = uniform_matrix(m, n, 1);
        group.bench_with_input(BenchmarkId::from_parameter(format!("{m}x{n}")), &a, |b, a| {
            b.iter(|| pseudo_inverse(black_box(a)).unwrap())
        });
    }
    group.finish();
}

fn hidden_matrix(c: &mut Criterion) {
    let mut group = c.benchmark_group("hidden_matrix");
    let x = uniform_matrix(1000, 8, 2);
    for kind in ModelKind::ALL {
        let model = UntrainedModel::init(config(kind, 8, 50)).unwrap();
        group.bench_function(kind.to_string(), |b| {
            b.iter(|| assemble_hidden_matrix(black_box(&model), black_box(&x)).unwrap())
        });
    }
    group.finish();
}

fn training(c: &mut Criterion) {
    let mut group = c.benchmark_group("train");
    let x = uniform_matrix(600, 8, 3);
    let y = uniform_matrix(600, 1, 4);
    for kind in ModelKind::ALL {
        let cfg = config(kind, 8, 50);
        group.bench_function(kind.to_string(), |b| {
            b.iter(|| train(cfg.clone(), black_box(&x), black_box(&y), TaskKind::Regression).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, pinv, hidden_matrix, training);
criterion_main!(benches);
