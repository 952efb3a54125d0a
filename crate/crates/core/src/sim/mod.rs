//! Deterministic physics-lite world.
//!
//! Scenes are plain values. A [`Simulator`] pairs the voxeme knowledge base
//! with contact parameters and provides placement, quasi-static settling,
//! support checks and agent reachability.

mod body;
pub mod random;
mod reach;
pub mod scenario;
mod settle;
mod support;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Aabb, Rotation, Vec3};
use crate::voxkb::{VoxKb, VoxKbError};

pub use body::Body;
pub use reach::{Reachability, StandingSurface};
pub use scenario::{ObjectSpec, Scenario, ScenarioError, ScenarioRegistry, SceneSpec};
pub use settle::{SettleReport, TraceSample, TrajectoryTrace};
pub use support::{SupportStatus, UnsupportedReason};

/// Penetration/gap slack for contacts, metres.
pub const CONTACT_TOLERANCE: f64 = 0.01;

pub type ObjectId = String;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid scene: {0}")]
    InvalidSpec(String),
    #[error("object `{0}` is not in the scene")]
    UnknownObject(ObjectId),
    #[error("object `{0}` cannot be moved")]
    Immovable(ObjectId),
    #[error("target pose for `{id}` collides with `{with}`")]
    CollisionAtTarget { id: ObjectId, with: String },
    #[error("settle did not reach a fixpoint within {0} iterations")]
    NonTermination(usize),
    #[error(transparent)]
    Shape(#[from] VoxKbError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub position: Vec3,
    pub rotation: Rotation,
}

impl Pose {
    pub fn new(position: Vec3, rotation: Rotation) -> Self {
        Pose { position, rotation }
    }

    pub fn at(x: f64, y: f64, z: f64) -> Self {
        Pose::new(Vec3::new(x, y, z), Rotation::identity())
    }
}

impl fmt::Display for Pose {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = &self.position;
        write!(f, "({:.3}, {:.3}, {:.3})", p.x, p.y, p.z)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneObject {
    pub id: ObjectId,
    pub shape: String,
    /// Full extents along the object's local X, Y, Z axes, metres.
    pub dimensions: Vec3,
    pub pose: Pose,
    pub movable: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub color: Option<String>,
}

impl SceneObject {
    pub fn aabb(&self) -> Aabb {
        Aabb::of_box(&self.pose.position, &self.dimensions, &self.pose.rotation)
    }

    pub fn volume(&self) -> f64 {
        self.dimensions.x * self.dimensions.y * self.dimensions.z
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Agent {
    /// Point on the floor the agent stands on.
    pub position: Vec3,
    pub jump_height: f64,
}

impl Default for Agent {
    fn default() -> Self {
        Agent {
            position: Vec3::zeros(),
            jump_height: 1.0,
        }
    }
}

/// World state. The ground is the plane `y = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub objects: BTreeMap<ObjectId, SceneObject>,
    pub agent: Agent,
}

impl Scene {
    pub fn empty(agent: Agent) -> Self {
        Scene {
            objects: BTreeMap::new(),
            agent,
        }
    }

    pub fn get(&self, id: &str) -> Result<&SceneObject, SimError> {
        self.objects
            .get(id)
            .ok_or_else(|| SimError::UnknownObject(id.to_string()))
    }

    pub fn pose(&self, id: &str) -> Option<Pose> {
        self.objects.get(id).map(|o| o.pose)
    }

    /// Movable objects, ordered by id.
    pub fn movables(&self) -> impl Iterator<Item = &SceneObject> {
        self.objects.values().filter(|o| o.movable)
    }

    /// Horizontal distance from the agent to an object's center.
    pub fn distance_to_agent(&self, obj: &SceneObject) -> f64 {
        let d = obj.pose.position - self.agent.position;
        (d.x * d.x + d.z * d.z).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimParams {
    pub contact_tolerance: f64,
    /// Upper bound on settle iterations is `max_iter_base + max_iter_per_object * n`.
    pub max_iter_base: usize,
    pub max_iter_per_object: usize,
}

impl Default for SimParams {
    fn default() -> Self {
        SimParams {
            contact_tolerance: CONTACT_TOLERANCE,
            max_iter_base: 16,
            max_iter_per_object: 4,
        }
    }
}

/// Knowledge base plus contact parameters. Cheap to clone.
#[derive(Debug, Clone)]
pub struct Simulator {
    kb: Arc<VoxKb>,
    pub params: SimParams,
}

impl Simulator {
    pub fn new(kb: Arc<VoxKb>) -> Self {
        Simulator {
            kb,
            params: SimParams::default(),
        }
    }

    pub fn with_builtin_kb() -> Self {
        Simulator::new(Arc::new(VoxKb::builtin()))
    }

    pub fn kb(&self) -> &VoxKb {
        &self.kb
    }

    pub fn kb_arc(&self) -> Arc<VoxKb> {
        Arc::clone(&self.kb)
    }

    /// Geometry and active habitat of one object.
    pub fn body<'s>(&self, scene: &'s Scene, id: &str) -> Result<Body<'s>, SimError> {
        let obj = scene.get(id)?;
        Ok(Body::new(obj, self.kb.lookup(&obj.shape)?))
    }

    pub fn bodies<'s>(&self, scene: &'s Scene) -> Result<Vec<Body<'s>>, SimError> {
        scene
            .objects
            .values()
            .map(|o| Ok(Body::new(o, self.kb.lookup(&o.shape)?)))
            .collect()
    }

    /// Instantiates a scene description.
    pub fn spawn(&self, spec: &SceneSpec) -> Result<Scene, SimError> {
        let mut scene = Scene::empty(spec.agent.clone());
        for os in spec.all_objects() {
            if scene.objects.contains_key(&os.id) {
                return Err(SimError::InvalidSpec(format!("duplicate id `{}`", os.id)));
            }
            if !(os.dimensions.iter().all(|d| *d > 0.0)) {
                return Err(SimError::InvalidSpec(format!(
                    "`{}` has non-positive dimensions",
                    os.id
                )));
            }
            self.kb
                .lookup(&os.shape)
                .map_err(|e| SimError::InvalidSpec(e.to_string()))?;
            let obj = os.to_object();
            scene.objects.insert(obj.id.clone(), obj);
        }
        if !(scene.agent.jump_height >= 0.0) {
            return Err(SimError::InvalidSpec("negative jump height".into()));
        }
        self.check_clearance(&scene)?;
        Ok(scene)
    }

    fn check_clearance(&self, scene: &Scene) -> Result<(), SimError> {
        let tol = self.params.contact_tolerance;
        let boxes: Vec<(&ObjectId, Aabb)> = scene.objects.iter().map(|(id, o)| (id, o.aabb())).collect();
        for (i, (id, a)) in boxes.iter().enumerate() {
            if a.min.y < -tol {
                return Err(SimError::InvalidSpec(format!("`{id}` is below the ground")));
            }
            for (other, b) in &boxes[i + 1..] {
                if a.penetrates(b, tol) {
                    return Err(SimError::InvalidSpec(format!("`{id}` interpenetrates `{other}`")));
                }
            }
        }
        Ok(())
    }

    /// First object (by id) whose box would interpenetrate `obj` at `pose`.
    pub fn collision_at(&self, scene: &Scene, id: &str, dims: &Vec3, pose: &Pose) -> Option<String> {
        let tol = self.params.contact_tolerance;
        let aabb = Aabb::of_box(&pose.position, dims, &pose.rotation);
        if aabb.min.y < -tol {
            return Some("ground".to_string());
        }
        scene
            .objects
            .values()
            .filter(|o| o.id != id)
            .find(|o| o.aabb().penetrates(&aabb, tol))
            .map(|o| o.id.clone())
    }

    /// Moves one object. Resting contact is allowed; interpenetration is not.
    pub fn place(&self, scene: &Scene, id: &str, pose: Pose) -> Result<Scene, SimError> {
        let obj = scene.get(id)?;
        if !obj.movable {
            return Err(SimError::Immovable(id.to_string()));
        }
        if let Some(with) = self.collision_at(scene, id, &obj.dimensions, &pose) {
            return Err(SimError::CollisionAtTarget {
                id: id.to_string(),
                with,
            });
        }
        let mut next = scene.clone();
        if let Some(o) = next.objects.get_mut(id) {
            o.pose = pose;
        }
        Ok(next)
    }

    pub fn support_check(&self, scene: &Scene, id: &str) -> Result<SupportStatus, SimError> {
        let bodies = self.bodies(scene)?;
        let idx = bodies
            .iter()
            .position(|b| b.obj.id == id)
            .ok_or_else(|| SimError::UnknownObject(id.to_string()))?;
        Ok(support::check(&bodies, idx, self.params.contact_tolerance))
    }

    pub fn settle(&self, scene: &Scene) -> Result<SettleReport, SimError> {
        self.settle_labeled(scene, "settle")
    }

    /// Settles and tags every produced trace with `context`.
    pub fn settle_labeled(&self, scene: &Scene, context: &str) -> Result<SettleReport, SimError> {
        settle::run(self, scene, context)
    }

    /// Whether the agent can climb to `target_height` using the scene's
    /// standing surfaces.
    pub fn reachable(&self, scene: &Scene, agent: &Agent, target_height: f64) -> Result<Reachability, SimError> {
        reach::reachable(self, scene, agent, target_height)
    }

    /// Whether the agent can stand on top of a particular object.
    pub fn can_stand_on(&self, scene: &Scene, agent: &Agent, id: &str) -> Result<Reachability, SimError> {
        reach::reach_surface(self, scene, agent, id)
    }
}

#[cfg(test)]
mod tests;
