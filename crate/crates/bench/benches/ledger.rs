use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};

use centledger_bench::{settled_economy, small_economy};
use centledger_core::analytics::detect_periodic_signal;
use centledger_core::ledger::TraceDirection;
use centledger_core::registry::{IssuePurpose, Registry, RegistryConfig};
use centledger_core::sim;
use centledger_core::verify::reconcile_all;

fn registry(c: &mut Criterion) {
    c.bench_function("registry/issue 10k cents", |b| {
        b.iter_batched(
            || Registry::new(RegistryConfig::for_supply(1, 1_000_000, 100)),
            |mut r| black_box(r.issue(10_000, IssuePurpose::Seed).unwrap()),
            BatchSize::SmallInput,
        )
    });
}

fn simulate(c: &mut Criterion) {
    let mut g = c.benchmark_group("sim");
    g.sample_size(10);
    g.bench_function("small economy, 10 days", |b| b.iter(|| sim::run(black_box(small_economy(10))).unwrap()));
    g.finish();
}

fn ledgers(c: &mut Criterion) {
    let e = settled_economy(30);
    let cents: Vec<_> = e.events().iter().step_by(97).filter_map(|ev| ev.cents.first().copied()).take(64).collect();
    c.bench_function("primary/trace 64 cents", |b| {
        b.iter(|| {
            for &tn in &cents {
                black_box(e.primary().trace_cent(tn, TraceDirection::Down, None).unwrap());
            }
        })
    });
    c.bench_function("primary/verify chain", |b| b.iter(|| black_box(e.primary().verify_chain())));
    c.bench_function("verify/reconcile all buckets", |b| b.iter(|| black_box(reconcile_all(e.primary(), e.secondary()))));
}

fn analytics(c: &mut Criterion) {
    let series: Vec<f64> = (0..1024).map(|i| ((i * 7919) % 101) as f64 + if i % 2 == 0 { 3.0 } else { 0.0 }).collect();
    c.bench_function("analytics/periodogram 1024 samples", |b| {
        b.iter(|| black_box(detect_periodic_signal(black_box(&series), 2).unwrap()))
    });
}

criterion_group!(benches, registry, simulate, ledgers, analytics);
criterion_main!(benches);
