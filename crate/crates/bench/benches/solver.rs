use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use nspforge::io::parse_wcsp;
use nspforge::solver::{
    branch_and_bound, dfs_first_feasible, gac_filter, node_consistency, sls_solve, table8_family, BnbConfig,
    SlsConfig,
};
use nspforge::Sense;
use nspforge_bench::EXAMPLE_4;

fn example_4(c: &mut Criterion) {
    let w = parse_wcsp(EXAMPLE_4).unwrap();
    c.bench_function("bnb/example4", |b| {
        b.iter(|| branch_and_bound(black_box(&w), Sense::Maximize, BnbConfig::default()))
    });
    c.bench_function("gac/example4", |b| b.iter(|| gac_filter(&node_consistency(black_box(&w)))));
}

fn family(c: &mut Criterion) {
    let mut g = c.benchmark_group("family-n5");
    g.sample_size(10);
    for extra in [4, 8] {
        let w = table8_family(5, extra, 1).unwrap();
        g.bench_with_input(BenchmarkId::new("bnb", extra), &w, |b, w| {
            b.iter(|| branch_and_bound(w, Sense::Minimize, BnbConfig::default()))
        });
        g.bench_with_input(BenchmarkId::new("dfs", extra), &w, |b, w| b.iter(|| dfs_first_feasible(w)));
        g.bench_with_input(BenchmarkId::new("gac", extra), &w, |b, w| b.iter(|| gac_filter(w)));
        g.bench_with_input(BenchmarkId::new("sls", extra), &w, |b, w| {
            b.iter(|| sls_solve(w, Sense::Minimize, &SlsConfig::default()))
        });
    }
    g.finish();
}

criterion_group!(benches, example_4, family);
criterion_main!(benches);
