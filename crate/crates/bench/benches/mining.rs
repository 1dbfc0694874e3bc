use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use nspforge::io::{schedule_to_transactions, Granularity};
use nspforge::mining::{apriori, generate_rules, two_phase, RuleShape};
use nspforge::Rational;
use nspforge_bench::{corpus, table_1, tables_2_3};

fn apriori_small(c: &mut Criterion) {
    let db = table_1();
    c.bench_function("apriori/table1", |b| {
        b.iter(|| {
            let f = apriori(black_box(&db), 2).unwrap();
            generate_rules(&f, Rational::new(3, 5), RuleShape::SingleConsequent).unwrap()
        })
    });
}

fn apriori_slots(c: &mut Criterion) {
    let schedule = corpus(1, 4).remove(0);
    let db = schedule_to_transactions(&schedule, Granularity::DayShift);
    c.bench_function("apriori/week-slots", |b| b.iter(|| apriori(black_box(&db), 2).unwrap()));
}

fn huim(c: &mut Criterion) {
    let (db, u) = tables_2_3();
    c.bench_function("two-phase/tables2-3", |b| {
        b.iter(|| two_phase(black_box(&db), &u, Rational::from_integer(15)).unwrap())
    });
}

criterion_group!(benches, apriori_small, apriori_slots, huim);
criterion_main!(benches);
