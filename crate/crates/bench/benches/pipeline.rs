use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use stackeval_core::explorer::{explore, probe_dataset, train_similarity, StaircaseGoal, TrainParams, TRAINING_SHAPES};
use stackeval_core::harness::score;
use stackeval_core::sim::ScenarioRegistry;
use stackeval_core::{Mode, Simulator};

const STAIRCASE: &str = "Stand the cylinder upright in front of the platform. Place a cube in front of the cylinder. \
Place the other cube on top of the cylinder. Climb onto the platform.";

const LLAMA: &str = "1. Place the cube on top of the sphere. 2. Place the cylinder on top of the cube.";

fn pipeline(c: &mut Criterion) {
    let sim = Simulator::with_builtin_kb();
    let reg = ScenarioRegistry::builtin();
    let sc = reg.get("f6").unwrap();
    for (name, text, mode) in [
        ("score_staircase_strict", STAIRCASE, Mode::Strict),
        ("score_sphere_stack_permissive", LLAMA, Mode::Permissive),
    ] {
        c.bench_function(name, |b| {
            b.iter(|| black_box(score(&sim, sc, black_box(text), mode, 0, 0.1).unwrap()))
        });
    }

    let data = probe_dataset(&sim, &TRAINING_SHAPES, 0).unwrap();
    c.bench_function("probe_dataset", |b| {
        b.iter(|| black_box(probe_dataset(&sim, &TRAINING_SHAPES, 0).unwrap()))
    });
    let mut group = c.benchmark_group("grounding");
    group.sample_size(10);
    group.bench_function("train_similarity", |b| {
        b.iter(|| black_box(train_similarity(&data, 0, TrainParams::default()).unwrap()))
    });
    group.finish();

    let model = train_similarity(&data, 0, TrainParams::default()).unwrap();
    let scene = sim.spawn(&sc.scene).unwrap();
    let goal = StaircaseGoal {
        height: sc.goal_height,
        jump: scene.agent.jump_height,
        platform: sc.target_platform.clone(),
    };
    c.bench_function("explore_canonical", |b| {
        b.iter(|| black_box(explore(&sim, &scene, &model, &goal).unwrap()))
    });
}

criterion_group!(benches, pipeline);
criterion_main!(benches);
