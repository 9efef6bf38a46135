use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use tbls_bench::instance;
use tbls_core::basealg::gale_shapley;
use tbls_core::oracle::max_weakly_stable;
use tbls_core::{tbls, Kind, Side, SolverParams, TieBreakingStrategy};

fn base_algorithm(c: &mut Criterion) {
    let mut group = c.benchmark_group("gale_shapley");
    for n in [100, 1000] {
        let inst = instance(Kind::Smti, n, 0.5, 0.5, 1);
        let s = TieBreakingStrategy::identity(&inst);
        group.bench_with_input(BenchmarkId::from_parameter(n), &inst, |b, inst| {
            b.iter(|| gale_shapley(black_box(inst), &s, Side::U))
        });
    }
    group.finish();
}

fn local_search(c: &mut Criterion) {
    let mut group = c.benchmark_group("tbls_300_iters");
    group.sample_size(20);
    for (kind, label) in [(Kind::Smti, "smti"), (Kind::Hrt, "hrt")] {
        for p1 in [0.5, 0.9] {
            let inst = instance(kind, 100, p1, 0.5, 2);
            let params = SolverParams {
                max_iters: 300,
                ..SolverParams::for_instance(&inst)
            };
            group.bench_function(BenchmarkId::new(label, p1), |b| {
                b.iter(|| tbls::run(black_box(&inst), &params).unwrap())
            });
        }
    }
    let inst = instance(Kind::Smti, 100, 0.5, 0.5, 3);
    let params = SolverParams {
        max_iters: 300,
        equity_mode: true,
        ..SolverParams::for_instance(&inst)
    };
    group.bench_function("smti_equity", |b| {
        b.iter(|| tbls::run(black_box(&inst), &params).unwrap())
    });
    group.finish();
}

fn oracle(c: &mut Criterion) {
    let inst = instance(Kind::Smti, 6, 0.3, 0.5, 4);
    c.bench_function("oracle_n6", |b| {
        b.iter(|| max_weakly_stable(black_box(&inst)).unwrap())
    });
}

criterion_group!(benches, base_algorithm, local_search, oracle);
criterion_main!(benches);
