use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use shapelab_bench::{disk, square};
use shapelab_core::optimize::{
    local_search, minimize_relaxed, FlipEvaluator, RelaxedOptions, SearchOptions,
};
use shapelab_core::{solve_eigen, solve_torsion, FunctionalParams, ProblemKind};

fn torsion(c: &mut Criterion) {
    let mut group = c.benchmark_group("torsion");
    for res in [32.0, 64.0, 128.0] {
        let set = disk(res);
        group.bench_with_input(BenchmarkId::from_parameter(res), &set, |b, s| {
            b.iter(|| solve_torsion(s, 1e-10).unwrap())
        });
    }
    group.finish();
}

fn eigen(c: &mut Criterion) {
    let mut group = c.benchmark_group("eigen");
    group.sample_size(10);
    for res in [32.0, 64.0] {
        let set = square(res);
        group.bench_with_input(BenchmarkId::from_parameter(res), &set, |b, s| {
            b.iter(|| solve_eigen(s, 1e-8).unwrap())
        });
    }
    group.finish();
}

fn flip_search(c: &mut Criterion) {
    let mut group = c.benchmark_group("flip_search");
    group.sample_size(10);
    let set = square(16.0);
    let params = FunctionalParams::new(ProblemKind::Compliance, 2, 1.8).unwrap();
    for (name, evaluator) in [
        ("factorized", FlipEvaluator::Factorized),
        ("resolve", FlipEvaluator::Resolve),
    ] {
        let opts = SearchOptions {
            evaluator,
            ..SearchOptions::default()
        };
        group.bench_function(name, |b| {
            b.iter(|| local_search(&set, &params, &opts).unwrap())
        });
    }
    group.finish();
}

fn relaxed(c: &mut Criterion) {
    let mut group = c.benchmark_group("relaxed");
    group.sample_size(10);
    let set = square(32.0);
    let params = FunctionalParams::new(ProblemKind::Compliance, 2, 1.8).unwrap();
    group.bench_function("square_32", |b| {
        b.iter(|| minimize_relaxed(set.grid(), &params, &RelaxedOptions::default(), 0).unwrap())
    });
    group.finish();
}

criterion_group!(benches, torsion, eigen, flip_search, relaxed);
criterion_main!(benches);
