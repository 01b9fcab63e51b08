use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use parqc::bench::{collect_failing_seeds, constant, expr_bug};
use parqc::{compute_size, run_parallel, run_sequential, shrink, Config, Seed, ShrinkStrategy};

fn size_schedule(c: &mut Criterion) {
    let cfg = Config::default();
    c.bench_function("compute_size", |b| {
        b.iter(|| (0..100).map(|p| compute_size(black_box(p), black_box(3), &cfg)).sum::<u64>())
    });
}

fn test_loop(c: &mut Criterion) {
    let case = constant();
    let mut g = c.benchmark_group("constant_10k");
    for k in [1usize, 2, 4] {
        let cfg = Config { max_success: 10_000, num_testers: k, seed: Some(Seed::new(1)), ..Config::default() };
        if k == 1 {
            g.bench_function("sequential", |b| {
                b.iter(|| run_sequential(&case.property, &case.generator, &case.shrinker, &cfg).unwrap())
            });
        }
        g.bench_with_input(BenchmarkId::new("parallel", k), &cfg, |b, cfg| {
            b.iter(|| run_parallel(&case.property, &case.generator, &case.shrinker, cfg).unwrap())
        });
    }
    g.finish();
}

fn shrinkers(c: &mut Criterion) {
    let case = expr_bug(true);
    let inputs: Vec<_> = collect_failing_seeds(&case, 20, Seed::new(2))
        .unwrap()
        .into_iter()
        .map(|(seed, size)| case.generator.run(seed, size as usize))
        .collect();
    let mut g = c.benchmark_group("shrink_expr");
    for (strategy, workers) in [
        (ShrinkStrategy::Sequential, 1),
        (ShrinkStrategy::Deterministic, 1),
        (ShrinkStrategy::Deterministic, 4),
        (ShrinkStrategy::Greedy, 4),
    ] {
        g.bench_function(BenchmarkId::new(strategy.to_string(), workers), |b| {
            b.iter(|| {
                for e in &inputs {
                    black_box(shrink(strategy, &case.property, &case.shrinker, e.clone(), workers).unwrap());
                }
            })
        });
    }
    g.finish();
}

criterion_group!(benches, size_schedule, test_loop, shrinkers);
criterion_main!(benches);
