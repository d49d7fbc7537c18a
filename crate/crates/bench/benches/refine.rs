use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use csbm::estimators::{degree_estimate, two_step_refine};
use csbm_bench::symmetric_instance;

fn refine(c: &mut Criterion) {
    let mut group = c.benchmark_group("two_step_refine");
    for n in [1_000usize, 10_000, 50_000] {
        let inst = symmetric_instance(n, 1.2, 11);
        let initial = degree_estimate(&inst.graph, &inst.params).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &inst, |b, inst| {
            b.iter(|| two_step_refine(&inst.graph, &initial, &inst.params).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, refine);
criterion_main!(benches);
