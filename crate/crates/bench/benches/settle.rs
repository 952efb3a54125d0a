use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use stackeval_core::sim::random::random_scene;
use stackeval_core::Simulator;

fn settle(c: &mut Criterion) {
    let sim = Simulator::with_builtin_kb();
    let mut group = c.benchmark_group("settle");
    for n in [2, 4, 8] {
        let scenes: Vec<_> = (0..32).map(|seed| random_scene(&sim, seed, n)).collect();
        group.bench_with_input(BenchmarkId::new("random_scenes", n), &scenes, |b, scenes| {
            b.iter(|| {
                for s in scenes {
                    black_box(sim.settle(s).unwrap());
                }
            })
        });
    }
    group.finish();
}

criterion_group!(benches, settle);
criterion_main!(benches);
