use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rsc_bench::{configs, cube};
use rsc_core::{factorize, pcg_solve, PcgOptions};

fn factor(c: &mut Criterion) {
    let mut group = c.benchmark_group("factorize");
    group.sample_size(10);
    for n in [12, 16] {
        let (a, coords) = cube(n);
        for (name, cfg) in configs() {
            group.bench_with_input(BenchmarkId::new(name, n), &n, |b, _| b.iter(|| factorize(&a, Some(&coords), &cfg).unwrap()));
        }
    }
    group.finish();
}

fn apply(c: &mut Criterion) {
    let mut group = c.benchmark_group("apply");
    let (a, coords) = cube(16);
    let r = vec![1.0; a.n()];
    for (name, cfg) in configs() {
        let f = factorize(&a, Some(&coords), &cfg).unwrap();
        group.bench_function(name, |b| b.iter(|| f.apply(&r)));
    }
    group.finish();
}

fn solve(c: &mut Criterion) {
    let mut group = c.benchmark_group("pcg");
    group.sample_size(10);
    let (a, coords) = cube(16);
    let rhs = vec![1.0; a.n()];
    for (name, cfg) in configs() {
        let f = factorize(&a, Some(&coords), &cfg).unwrap();
        group.bench_function(name, |b| b.iter(|| pcg_solve(&a, &rhs, &f, &PcgOptions::default()).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, factor, apply, solve);
criterion_main!(benches);
