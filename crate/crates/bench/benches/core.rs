use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use flow_core::analysis::scan_catalog;
use flow_core::derive::derive_document_flows;
use flow_core::dsl::{parse, serialize};
use flow_core::sim::{simulate_trials, QuantaConfig};
use flow_core::testkit::{fixtures, gen};

fn dsl(c: &mut Criterion) {
    let shape = gen::ModelShape {
        max_stores: 40,
        max_activities: 20,
        max_flows: 120,
        ..Default::default()
    };
    let m = gen::valid_model(&mut gen::rng(1), &shape);
    let text = serialize(&m).unwrap();
    c.bench_function("serialize", |b| {
        b.iter(|| serialize(black_box(&m)).unwrap())
    });
    c.bench_function("parse", |b| b.iter(|| parse(black_box(&text)).unwrap()));
}

fn derive(c: &mut Criterion) {
    let mut group = c.benchmark_group("derive_document_flows");
    for n in [8, 16, 32] {
        let p = gen::process(&mut gen::rng(n as u64), n, 6);
        group.bench_with_input(BenchmarkId::from_parameter(n), &p, |b, p| {
            b.iter(|| derive_document_flows(p).unwrap())
        });
    }
    group.finish();
}

fn patterns(c: &mut Criterion) {
    let m = fixtures::notation_example();
    c.bench_function("scan_catalog/notation_example", |b| {
        b.iter(|| scan_catalog(black_box(&m)))
    });
    let small = gen::small_model(&mut gen::rng(3), 10);
    c.bench_function("scan_catalog/small", |b| {
        b.iter(|| scan_catalog(black_box(&small)))
    });
}

fn simulation(c: &mut Criterion) {
    let m = fixtures::stille_post();
    let cfg = QuantaConfig {
        falsify_prob: 0.05,
        ..QuantaConfig::new(100, 20, 5, 7)
    };
    c.bench_function("simulate_trials/100", |b| {
        b.iter(|| simulate_trials(&m, &cfg, "Kunde", 100).unwrap())
    });
}

criterion_group!(benches, dsl, derive, patterns, simulation);
criterion_main!(benches);
