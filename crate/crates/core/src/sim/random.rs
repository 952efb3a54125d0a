//! Seeded random scenes for property checks and benchmarks.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::{Rotation, Vec3};

use super::{Agent, Pose, Scene, SceneObject, Simulator};

pub const SHAPES: [&str; 9] = [
    "cube",
    "cuboid",
    "pyramid",
    "wedge",
    "sphere",
    "egg",
    "ellipsoid",
    "capsule",
    "cylinder",
];

fn dimensions(shape: &str, rng: &mut ChaCha8Rng) -> Vec3 {
    let s = rng.random_range(0.6..1.2);
    match shape {
        "cuboid" => Vec3::new(s, s * 0.5, s * 0.8),
        "egg" | "ellipsoid" | "capsule" => Vec3::new(s * 0.7, s, s * 0.7),
        _ => Vec3::new(s, s, s),
    }
}

/// Random resting orientation for `shape`: one of its resting habitats,
/// spun about the vertical by a random yaw.
pub fn resting_rotation(sim: &Simulator, shape: &str, rng: &mut ChaCha8Rng) -> Rotation {
    let voxeme = sim.kb().lookup(shape).expect("registered shape");
    let resting: Vec<_> = voxeme.habitats.iter().filter(|h| h.can_rest()).collect();
    let h = resting.choose(rng).expect("every voxeme can rest");
    let yaw = Rotation::from_axis_angle(&Vec3::y_axis(), rng.random_range(0.0..std::f64::consts::TAU));
    yaw * h.up.canonical()
}

/// A scene of up to `max_objects` objects. Objects either stand on the floor
/// or are dropped onto a previously placed object with a random offset, so
/// many scenes start out unstable.
pub fn random_scene(sim: &Simulator, seed: u64, max_objects: usize) -> Scene {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut scene = Scene::empty(Agent::default());
    let n = rng.random_range(1..=max_objects.max(1));
    let mut attempts = 0;
    while scene.objects.len() < n && attempts < 200 {
        attempts += 1;
        let shape = *SHAPES.choose(&mut rng).expect("non-empty");
        let dims = dimensions(shape, &mut rng);
        let rotation = resting_rotation(sim, shape, &mut rng);
        let half = crate::geometry::Aabb::of_box(&Vec3::zeros(), &dims, &rotation).max;
        let stack = !scene.objects.is_empty() && rng.random_bool(0.5);
        let position = if stack {
            let base: Vec<&SceneObject> = scene.objects.values().collect();
            let base = base.choose(&mut rng).expect("non-empty");
            let top = base.aabb().max.y;
            Vec3::new(
                base.pose.position.x + rng.random_range(-0.6..0.6),
                top + half.y,
                base.pose.position.z + rng.random_range(-0.6..0.6),
            )
        } else {
            Vec3::new(rng.random_range(-6.0..6.0), half.y, rng.random_range(-6.0..6.0))
        };
        let id = format!("{shape}_{}", scene.objects.len() + 1);
        let pose = Pose::new(position, rotation);
        if sim.collision_at(&scene, &id, &dims, &pose).is_some() {
            continue;
        }
        scene.objects.insert(
            id.clone(),
            SceneObject {
                id,
                shape: shape.to_string(),
                dimensions: dims,
                pose,
                movable: true,
                color: None,
            },
        );
    }
    scene
}

/// One object alone on the floor in a random resting pose.
pub fn lone_object(sim: &Simulator, seed: u64) -> Scene {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shape = *SHAPES.choose(&mut rng).expect("non-empty");
    let dims = dimensions(shape, &mut rng);
    let rotation = resting_rotation(sim, shape, &mut rng);
    let half = crate::geometry::Aabb::of_box(&Vec3::zeros(), &dims, &rotation).max;
    let mut scene = Scene::empty(Agent::default());
    let id = format!("{shape}_1");
    scene.objects.insert(
        id.clone(),
        SceneObject {
            id,
            shape: shape.to_string(),
            dimensions: dims,
            pose: Pose::new(
                Vec3::new(rng.random_range(-5.0..5.0), half.y, rng.random_range(-5.0..5.0)),
                rotation,
            ),
            movable: true,
            color: None,
        },
    );
    scene
}
