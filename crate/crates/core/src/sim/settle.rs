use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::geometry::{Aabb, Rotation, Vec3};
use crate::voxkb::{active_habitat, SurfaceClass, UP_TOLERANCE_RAD};

use super::{support, ObjectId, Pose, Scene, SimError, Simulator};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceSample {
    pub tick: u64,
    pub position: Vec3,
    pub rotation: Rotation,
}

/// Pose history of one object under an interaction.
///
/// Ticks are half-iterations of the settle loop: a relocation during
/// iteration `i` contributes samples at `2i` (start), `2i + 1` (falling) and
/// `2i + 2` (landed).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryTrace {
    pub object_id: ObjectId,
    pub samples: Vec<TraceSample>,
    pub action_context: String,
    /// Class of the surface the object rests on at the end of the trace.
    pub contact: SurfaceClass,
    /// Whether the object ends the trace resting on the floor.
    #[serde(default)]
    pub on_ground: bool,
}

impl TrajectoryTrace {
    pub fn first(&self) -> Option<&TraceSample> {
        self.samples.first()
    }

    pub fn last(&self) -> Option<&TraceSample> {
        self.samples.last()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SettleReport {
    pub scene: Scene,
    /// One trace per relocated object, ordered by object id.
    pub traces: Vec<TrajectoryTrace>,
    pub displaced: BTreeSet<ObjectId>,
    pub iterations: usize,
}

impl SettleReport {
    pub fn trace(&self, id: &str) -> Option<&TrajectoryTrace> {
        self.traces.iter().find(|t| t.object_id == id)
    }
}

/// Quasi-static settle: repeatedly take the lowest unsupported movable object
/// and drop it to the floor at the nearest free spot in the +X direction,
/// until every object is supported.
pub(super) fn run(sim: &Simulator, start: &Scene, context: &str) -> Result<SettleReport, SimError> {
    let mut scene = start.clone();
    let n = scene.movables().count();
    let max_iter = sim.params.max_iter_base + sim.params.max_iter_per_object * n;
    let tol = sim.params.contact_tolerance;
    let mut samples: BTreeMap<ObjectId, Vec<TraceSample>> = BTreeMap::new();
    let mut iter = 0usize;
    loop {
        if iter >= max_iter {
            return Err(SimError::NonTermination(max_iter));
        }
        let falling = {
            let bodies = sim.bodies(&scene)?;
            let mut order: Vec<usize> = (0..bodies.len()).filter(|&i| bodies[i].obj.movable).collect();
            order.sort_by(|&a, &b| {
                bodies[a]
                    .bottom()
                    .total_cmp(&bodies[b].bottom())
                    .then_with(|| bodies[a].obj.id.cmp(&bodies[b].obj.id))
            });
            order
                .into_iter()
                .find(|&i| !support::check(&bodies, i, tol).is_supported())
                .map(|i| bodies[i].obj.id.clone())
        };
        let Some(id) = falling else { break };
        let from = scene.get(&id)?.pose;
        let to = landing_pose(sim, &scene, &id)?;
        if let Some(o) = scene.objects.get_mut(&id) {
            o.pose = to;
        }
        let base = 2 * iter as u64;
        let trace = samples.entry(id).or_default();
        if trace.last().map(|s| s.tick) != Some(base) {
            trace.push(TraceSample {
                tick: base,
                position: from.position,
                rotation: from.rotation,
            });
        }
        trace.push(TraceSample {
            tick: base + 1,
            position: (from.position + to.position) * 0.5,
            rotation: from.rotation,
        });
        trace.push(TraceSample {
            tick: base + 2,
            position: to.position,
            rotation: to.rotation,
        });
        iter += 1;
    }
    let mut traces = Vec::with_capacity(samples.len());
    for (id, s) in samples {
        let obj = scene.get(&id)?;
        let contact = active_habitat(sim.kb().lookup(&obj.shape)?, &obj.pose.rotation)
            .support_surface
            .class();
        traces.push(TrajectoryTrace {
            object_id: id,
            samples: s,
            action_context: context.to_string(),
            contact,
            on_ground: true,
        });
    }
    let displaced = traces.iter().map(|t| t.object_id.clone()).collect();
    Ok(SettleReport {
        scene,
        traces,
        displaced,
        iterations: iter,
    })
}

/// Where an unsupported object comes to rest: on the floor, reoriented into
/// its nearest resting habitat if needed, at the first collision-free spot
/// at or beyond its current X coordinate.
fn landing_pose(sim: &Simulator, scene: &Scene, id: &str) -> Result<Pose, SimError> {
    let obj = scene.get(id)?;
    let voxeme = sim.kb().lookup(&obj.shape)?;
    let rot = obj.pose.rotation;
    let keep = voxeme.active_habitat_index(&rot).is_some_and(|i| {
        let h = &voxeme.habitats[i];
        h.can_rest() && h.up.deviation(&rot) <= UP_TOLERANCE_RAD
    });
    let rotation = if keep {
        rot
    } else {
        let j = voxeme
            .nearest_resting_index(&rot)
            .ok_or_else(|| SimError::InvalidSpec(format!("`{}` has no resting habitat", obj.shape)))?;
        voxeme.habitats[j].up.snap(&rot)
    };
    let reach = Aabb::of_box(&Vec3::zeros(), &obj.dimensions, &rotation).max;
    let x0 = obj.pose.position.x;
    let z = obj.pose.position.z;
    let mut candidates = vec![x0];
    candidates.extend(
        scene
            .objects
            .values()
            .filter(|o| o.id != id)
            .map(|o| o.aabb().max.x + reach.x)
            .filter(|&x| x > x0),
    );
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();
    for x in candidates {
        let pose = Pose::new(Vec3::new(x, reach.y, z), rotation);
        if sim.collision_at(scene, id, &obj.dimensions, &pose).is_none() {
            return Ok(pose);
        }
    }
    // the last candidate clears every object's right edge, so this is unreachable
    Err(SimError::NonTermination(0))
}
