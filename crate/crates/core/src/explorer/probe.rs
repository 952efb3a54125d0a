use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::{Aabb, Rotation, Vec3};
use crate::sim::{Agent, Pose, Scene, SceneObject, Simulator, TraceSample, TrajectoryTrace};
use crate::voxkb::{active_habitat, IntrinsicClass, SurfaceClass, UpConstraint};

use super::{ExplorerError, Label};

pub const FEATURE_DIM: usize = 8;

/// Feature order. Frozen: stored models depend on it.
pub const FEATURE_NAMES: [&str; FEATURE_DIM] = [
    "drop",
    "lateral_drift",
    "max_tilt_change",
    "on_ground",
    "contact_flat",
    "contact_round",
    "contact_point",
    "trace_length",
];

pub type Features = [f64; FEATURE_DIM];

pub const PROBE_BASE_ID: &str = "__probe_base";

/// Shapes the reference behaviors come from. No mixed shapes.
pub const TRAINING_SHAPES: [&str; 8] = [
    "cube",
    "cuboid",
    "pyramid",
    "wedge",
    "sphere",
    "egg",
    "ellipsoid",
    "capsule",
];

pub const PROBES_PER_HABITAT: usize = 10;

/// Horizontal placement jitter of training probes, metres.
pub const PROBE_JITTER: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProbeSource {
    pub shape: String,
    /// Up constraint of the habitat the object was probed in.
    pub orientation: String,
    pub trace_id: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledFeatures {
    pub features: Features,
    pub source: ProbeSource,
    pub label: Label,
}

/// Stacks `id` on top of a unit cube standing where the agent is and lets
/// the world settle. Returns the probed object's trajectory. `scene` itself
/// is never modified.
pub fn stack_probe(sim: &Simulator, scene: &Scene, id: &str) -> Result<TrajectoryTrace, ExplorerError> {
    let rotation = scene.get(id)?.pose.rotation;
    probe_in(sim, scene, id, rotation, [0.0, 0.0])
}

/// [`stack_probe`] with an explicit orientation and horizontal offset.
pub fn probe_in(
    sim: &Simulator,
    scene: &Scene,
    id: &str,
    rotation: Rotation,
    offset: [f64; 2],
) -> Result<TrajectoryTrace, ExplorerError> {
    let obj = scene.get(id)?;
    if !obj.movable {
        return Err(ExplorerError::Immovable(id.to_string()));
    }
    let mut work = scene.clone();
    let mut held = work.objects.remove(id).expect("checked above");
    let at = scene.agent.position;
    let base = SceneObject {
        id: PROBE_BASE_ID.to_string(),
        shape: "cube".into(),
        dimensions: Vec3::new(1.0, 1.0, 1.0),
        pose: Pose::at(at.x, 0.5, at.z),
        movable: false,
        color: None,
    };
    let blocked = |with: String| ExplorerError::ProbeBlocked {
        id: id.to_string(),
        with,
    };
    if let Some(with) = sim.collision_at(&work, PROBE_BASE_ID, &base.dimensions, &base.pose) {
        return Err(blocked(with));
    }
    let top = base.aabb().max.y;
    work.objects.insert(base.id.clone(), base);
    let half = Aabb::of_box(&Vec3::zeros(), &held.dimensions, &rotation).max;
    let start = Pose::new(Vec3::new(at.x + offset[0], top + half.y, at.z + offset[1]), rotation);
    if let Some(with) = sim.collision_at(&work, id, &held.dimensions, &start) {
        return Err(blocked(with));
    }
    held.pose = start;
    let shape = held.shape.clone();
    work.objects.insert(id.to_string(), held);
    let report = sim.settle_labeled(&work, "stack_probe")?;
    if let Some(t) = report.trace(id) {
        return Ok(t.clone());
    }
    let sample = |tick| TraceSample {
        tick,
        position: start.position,
        rotation: start.rotation,
    };
    Ok(TrajectoryTrace {
        object_id: id.to_string(),
        samples: vec![sample(0), sample(1)],
        action_context: "stack_probe".into(),
        contact: active_habitat(sim.kb().lookup(&shape)?, &rotation)
            .support_surface
            .class(),
        on_ground: false,
    })
}

/// Raw behavior features of a trace, in [`FEATURE_NAMES`] order.
pub fn featurize(trace: &TrajectoryTrace) -> Result<Features, ExplorerError> {
    let (Some(first), Some(last)) = (trace.first(), trace.last()) else {
        return Err(ExplorerError::DegenerateTrace(trace.samples.len()));
    };
    if trace.samples.len() < 2 {
        return Err(ExplorerError::DegenerateTrace(trace.samples.len()));
    }
    let d = last.position - first.position;
    let tilt = trace
        .samples
        .iter()
        .map(|s| first.rotation.angle_to(&s.rotation))
        .fold(0.0, f64::max);
    let onehot = |c| if trace.contact == c { 1.0 } else { 0.0 };
    Ok([
        -d.y,
        d.x.hypot(d.z),
        tilt,
        if trace.on_ground { 1.0 } else { 0.0 },
        onehot(SurfaceClass::Flat),
        onehot(SurfaceClass::Round),
        onehot(SurfaceClass::Point),
        trace.samples.len() as f64,
    ])
}

/// Size used when probing a bare shape.
pub fn probe_dimensions(shape: &str) -> Vec3 {
    match shape {
        "cuboid" => Vec3::new(1.0, 0.5, 0.8),
        "egg" | "ellipsoid" | "capsule" => Vec3::new(0.7, 1.0, 0.7),
        _ => Vec3::new(1.0, 1.0, 1.0),
    }
}

pub(super) fn habitat_rotation(up: &UpConstraint, current: &Rotation) -> Rotation {
    match up {
        UpConstraint::Any => *current,
        c => c.canonical(),
    }
}

/// Probe samples for every habitat of every shape in `shapes`, labeled by the
/// shape's class. Each (shape, habitat) pair gets its own random stream, so
/// the result does not depend on thread scheduling.
pub fn probe_dataset(sim: &Simulator, shapes: &[&str], seed: u64) -> Result<Vec<LabeledFeatures>, ExplorerError> {
    let mut jobs = Vec::new();
    for shape in shapes {
        let v = sim.kb().lookup(shape)?;
        let label = match v.intrinsic_class {
            IntrinsicClass::Flat => Label::Flat,
            IntrinsicClass::Round => Label::Round,
            IntrinsicClass::Mixed => return Err(ExplorerError::MixedShape(shape.to_string())),
        };
        for (h, habitat) in v.habitats.iter().enumerate() {
            jobs.push((shape.to_string(), h, habitat.up, label));
        }
    }
    let chunks: Vec<Result<Vec<LabeledFeatures>, ExplorerError>> = jobs
        .par_iter()
        .enumerate()
        .map(|(stream, (shape, h, up, label))| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(stream as u64);
            let rotation = habitat_rotation(up, &Rotation::identity());
            let mut scene = Scene::empty(Agent::default());
            let id = shape.clone();
            let dims = probe_dimensions(shape);
            let half = Aabb::of_box(&Vec3::zeros(), &dims, &rotation).max;
            scene.objects.insert(
                id.clone(),
                SceneObject {
                    id: id.clone(),
                    shape: shape.clone(),
                    dimensions: dims,
                    pose: Pose::new(Vec3::new(3.0, half.y, 3.0), rotation),
                    movable: true,
                    color: None,
                },
            );
            (0..PROBES_PER_HABITAT)
                .map(|i| {
                    let offset = [
                        rng.random_range(-PROBE_JITTER..=PROBE_JITTER),
                        rng.random_range(-PROBE_JITTER..=PROBE_JITTER),
                    ];
                    let trace = probe_in(sim, &scene, &id, rotation, offset)?;
                    Ok(LabeledFeatures {
                        features: featurize(&trace)?,
                        source: ProbeSource {
                            shape: shape.clone(),
                            orientation: up.to_string(),
                            trace_id: format!("{shape}/{h}/{i}"),
                        },
                        label: *label,
                    })
                })
                .collect()
        })
        .collect();
    let mut out = Vec::new();
    for c in chunks {
        out.extend(c?);
    }
    Ok(out)
}
