use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;
use subexp_bench::{reference_event, worked_examples};
use subexp_core::{esscher_is, naive_mc, shift_is};

const REPS: u64 = 20_000;

fn estimators(c: &mut Criterion) {
    let event = reference_event();
    let mut group = c.benchmark_group("estimators_n100");
    group.sample_size(10);
    for (name, fe, dist) in worked_examples() {
        group.bench_with_input(BenchmarkId::new("naive", name), &dist, |b, d| {
            b.iter(|| naive_mc(d, &event, black_box(REPS), 1).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("esscher", name), &dist, |b, d| {
            b.iter(|| esscher_is(d, &fe, &event, black_box(REPS), 1).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("shift", name), &dist, |b, d| {
            b.iter(|| shift_is(d, &event, black_box(REPS), 1).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, estimators);
criterion_main!(benches);
