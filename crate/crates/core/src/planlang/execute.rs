//! Running grounded plans in the simulator.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::{Aabb, Rotation, Vec3};
use crate::sim::{ObjectId, Pose, Scene, SceneObject, SettleReport, SimError, Simulator};
use crate::voxkb::{Axis, UpConstraint, UP_TOLERANCE_RAD};

use super::resolve::{GroundedAction, GroundedPlan, GroundedRegion};
use super::Orientation;

/// Half-width of the square of floor searched for free spots, metres.
const ROOM_HALF_WIDTH: f64 = 6.0;
const GROUND_TRIES: usize = 256;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Settle after every step and stop at the first failure.
    #[default]
    Strict,
    /// Place everything, then settle once.
    Permissive,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Strict => "strict",
            Mode::Permissive => "permissive",
        })
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "strict" => Ok(Mode::Strict),
            "permissive" => Ok(Mode::Permissive),
            other => Err(format!("unknown mode `{other}` (expected strict or permissive)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FailureReason {
    UnknownObject {
        reference: String,
    },
    Collision {
        object: ObjectId,
        with: String,
    },
    Immovable {
        object: ObjectId,
    },
    /// The placed object did not stay where it was put.
    Unstable {
        object: ObjectId,
        displaced: Vec<ObjectId>,
    },
    Unreachable {
        target: ObjectId,
    },
    InvalidTarget {
        detail: String,
    },
    Simulation {
        detail: String,
    },
}

impl fmt::Display for FailureReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FailureReason::UnknownObject { reference } => write!(f, "unknown object `{reference}`"),
            FailureReason::Collision { object, with } => write!(f, "`{object}` would collide with `{with}`"),
            FailureReason::Immovable { object } => write!(f, "`{object}` cannot be moved"),
            FailureReason::Unstable { object, .. } => write!(f, "`{object}` does not stay in place"),
            FailureReason::Unreachable { target } => write!(f, "cannot climb onto `{target}`"),
            FailureReason::InvalidTarget { detail } | FailureReason::Simulation { detail } => f.write_str(detail),
        }
    }
}

impl From<SimError> for FailureReason {
    fn from(e: SimError) -> Self {
        match e {
            SimError::CollisionAtTarget { id, with } => FailureReason::Collision { object: id, with },
            SimError::Immovable(object) => FailureReason::Immovable { object },
            SimError::UnknownObject(reference) => FailureReason::UnknownObject { reference },
            other => FailureReason::Simulation {
                detail: other.to_string(),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum StepOutcome {
    Ignored,
    /// Poses that changed during the step.
    Executed {
        delta: Vec<(ObjectId, Pose)>,
    },
    Failed {
        reason: FailureReason,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    /// Zero-based position in the plan, ignored steps included.
    pub index: usize,
    pub outcome: StepOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecutionTrace {
    pub mode: Mode,
    pub steps: Vec<StepRecord>,
    /// Objects the plan moved, plus the movable objects it built on or against.
    pub placed: BTreeSet<ObjectId>,
    /// Where the plan put each placed object, before any settling.
    pub intended: BTreeMap<ObjectId, Pose>,
    pub initial: Scene,
    pub final_scene: Scene,
    /// Settle runs, keyed by the step that triggered them. Permissive mode
    /// has a single run keyed by the plan length.
    pub settles: Vec<(usize, SettleReport)>,
}

impl ExecutionTrace {
    pub fn failures(&self) -> impl Iterator<Item = (usize, &FailureReason)> {
        self.steps.iter().filter_map(|s| match &s.outcome {
            StepOutcome::Failed { reason } => Some((s.index, reason)),
            _ => None,
        })
    }

    pub fn first_failure(&self) -> Option<(usize, &FailureReason)> {
        self.failures().next()
    }
}

fn oriented(sim: &Simulator, obj: &SceneObject, o: Option<Orientation>) -> Rotation {
    let current = obj.pose.rotation;
    let (Some(o), Ok(voxeme)) = (o, sim.kb().lookup(&obj.shape)) else {
        return current;
    };
    let wanted = voxeme.habitats.iter().find(|h| {
        h.can_rest()
            && match (o, h.up) {
                (Orientation::Upright, UpConstraint::Along(sa)) => sa.axis == Axis::Y && sa.positive,
                (Orientation::OnSide, UpConstraint::Along(sa)) => sa.axis != Axis::Y,
                (Orientation::OnSide, UpConstraint::Across(_)) => true,
                _ => false,
            }
    });
    match wanted {
        Some(h) if h.up.deviation(&current) <= UP_TOLERANCE_RAD => current,
        Some(h) => h.up.canonical(),
        None => current,
    }
}

fn half_extents(obj: &SceneObject, rotation: &Rotation) -> Vec3 {
    Aabb::of_box(&Vec3::zeros(), &obj.dimensions, rotation).max
}

fn union_box(scene: &Scene, ids: &[ObjectId]) -> Result<Aabb, FailureReason> {
    let mut acc: Option<Aabb> = None;
    for id in ids {
        let b = scene.get(id).map_err(FailureReason::from)?.aabb();
        acc = Some(match acc {
            None => b,
            Some(a) => Aabb {
                min: a.min.inf(&b.min),
                max: a.max.sup(&b.max),
            },
        });
    }
    acc.ok_or_else(|| FailureReason::InvalidTarget {
        detail: "empty anchor".into(),
    })
}

/// Pose flush against one face of `anchor` on the floor. `axis` is 0 for X
/// and 2 for Z; `sign` picks the face.
fn flush(anchor: &Aabb, half: &Vec3, axis: usize, sign: f64) -> Vec3 {
    let c = anchor.center();
    let mut p = Vec3::new(c.x, half.y, c.z);
    p[axis] = if sign > 0.0 {
        anchor.max[axis] + half[axis]
    } else {
        anchor.min[axis] - half[axis]
    };
    p
}

/// Horizontal axis along which the agent looks at `anchor`, and the sign of
/// the face turned towards the agent.
fn sight_line(scene: &Scene, anchor: &Aabb) -> (usize, f64) {
    let d = scene.agent.position - anchor.center();
    let (axis, v) = if d.x.abs() >= d.z.abs() { (0, d.x) } else { (2, d.z) };
    (axis, if v > 0.0 { 1.0 } else { -1.0 })
}

fn target_pose(sim: &Simulator, scene: &Scene, step: &GroundedAction) -> Result<(ObjectId, Pose), FailureReason> {
    let (id, orientation) = match step {
        GroundedAction::PlaceOn {
            object, orientation, ..
        }
        | GroundedAction::PlaceAt {
            object, orientation, ..
        } => (object, *orientation),
        GroundedAction::Rotate { object, orientation } => (object, Some(*orientation)),
        _ => unreachable!("only placements have target poses"),
    };
    let obj = scene.get(id).map_err(FailureReason::from)?;
    let rotation = oriented(sim, obj, orientation);
    let half = half_extents(obj, &rotation);
    let position = match step {
        GroundedAction::PlaceOn { base, .. } => {
            if base.contains(id) {
                return Err(FailureReason::InvalidTarget {
                    detail: format!("`{id}` cannot be placed on itself"),
                });
            }
            let top = scene
                .get(base.last().expect("bound"))
                .map_err(FailureReason::from)?
                .aabb();
            let c = top.center();
            Vec3::new(c.x, top.max.y + half.y, c.z)
        }
        GroundedAction::Rotate { .. } => {
            let p = obj.pose.position;
            Vec3::new(p.x, obj.aabb().min.y + half.y, p.z)
        }
        GroundedAction::PlaceAt { region, .. } => match region {
            GroundedRegion::Ground { seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let mut blocker = String::new();
                for _ in 0..GROUND_TRIES {
                    let p = Vec3::new(
                        rng.random_range(-ROOM_HALF_WIDTH..ROOM_HALF_WIDTH),
                        half.y,
                        rng.random_range(-ROOM_HALF_WIDTH..ROOM_HALF_WIDTH),
                    );
                    match sim.collision_at(scene, id, &obj.dimensions, &Pose::new(p, rotation)) {
                        None => return Ok((id.clone(), Pose::new(p, rotation))),
                        Some(w) => blocker = w,
                    }
                }
                return Err(FailureReason::Collision {
                    object: id.clone(),
                    with: blocker,
                });
            }
            GroundedRegion::InFrontOf { anchor } | GroundedRegion::Behind { anchor } => {
                if anchor.contains(id) {
                    return Err(FailureReason::InvalidTarget {
                        detail: format!("`{id}` cannot be placed next to itself"),
                    });
                }
                let b = union_box(scene, anchor)?;
                let (axis, sign) = sight_line(scene, &b);
                let sign = if matches!(region, GroundedRegion::Behind { .. }) {
                    -sign
                } else {
                    sign
                };
                flush(&b, &half, axis, sign)
            }
            GroundedRegion::Beside { anchor, seed } => {
                if anchor.contains(id) {
                    return Err(FailureReason::InvalidTarget {
                        detail: format!("`{id}` cannot be placed next to itself"),
                    });
                }
                let b = union_box(scene, anchor)?;
                let (axis, _) = sight_line(scene, &b);
                let across = 2 - axis;
                let first = if ChaCha8Rng::seed_from_u64(*seed).random_bool(0.5) {
                    1.0
                } else {
                    -1.0
                };
                let a = flush(&b, &half, across, first);
                let free = |p: &Vec3| {
                    sim.collision_at(scene, id, &obj.dimensions, &Pose::new(*p, rotation))
                        .is_none()
                };
                if free(&a) {
                    a
                } else {
                    let other = flush(&b, &half, across, -first);
                    if free(&other) {
                        other
                    } else {
                        a
                    }
                }
            }
        },
        _ => unreachable!(),
    };
    Ok((id.clone(), Pose::new(position, rotation)))
}

fn support_ids(step: &GroundedAction) -> &[ObjectId] {
    match step {
        GroundedAction::PlaceOn { base, .. } => base,
        GroundedAction::PlaceAt { region, .. } => region.anchor(),
        _ => &[],
    }
}

/// Executes `plan` step by step from `scene`, which is left untouched.
///
/// Strict mode settles after every placement and stops at the first step
/// that fails, including placements whose object is moved by the settle; the
/// scene is rolled back to before that step. Permissive mode carries on past
/// failed steps and settles once at the end. Climb steps are checked for
/// reachability only in strict mode.
pub fn operationalize(sim: &Simulator, plan: &GroundedPlan, scene: &Scene, mode: Mode) -> ExecutionTrace {
    let mut current = scene.clone();
    let mut steps = Vec::with_capacity(plan.steps.len());
    let mut placed = BTreeSet::new();
    let mut intended = BTreeMap::new();
    let mut settles = Vec::new();
    for (index, step) in plan.steps.iter().enumerate() {
        let outcome = match step {
            GroundedAction::Ignore { .. } => StepOutcome::Ignored,
            GroundedAction::Unresolved { reference, .. } => StepOutcome::Failed {
                reason: FailureReason::UnknownObject {
                    reference: reference.clone(),
                },
            },
            GroundedAction::Climb { target } => {
                let top = target.last().expect("bound");
                if mode == Mode::Permissive {
                    StepOutcome::Executed { delta: Vec::new() }
                } else {
                    match sim.can_stand_on(&current, &current.agent, top) {
                        Ok(r) if r.reachable => StepOutcome::Executed { delta: Vec::new() },
                        Ok(_) => StepOutcome::Failed {
                            reason: FailureReason::Unreachable { target: top.clone() },
                        },
                        Err(e) => StepOutcome::Failed { reason: e.into() },
                    }
                }
            }
            _ => match target_pose(sim, &current, step).and_then(|(id, pose)| {
                sim.place(&current, &id, pose)
                    .map(|next| (id, pose, next))
                    .map_err(FailureReason::from)
            }) {
                Err(reason) => StepOutcome::Failed { reason },
                Ok((id, pose, next)) => {
                    for s in support_ids(step) {
                        if current.objects.get(s).is_some_and(|o| o.movable) {
                            placed.insert(s.clone());
                            intended.entry(s.clone()).or_insert(current.objects[s].pose);
                        }
                    }
                    placed.insert(id.clone());
                    intended.insert(id.clone(), pose);
                    match mode {
                        Mode::Permissive => {
                            current = next;
                            StepOutcome::Executed {
                                delta: vec![(id, pose)],
                            }
                        }
                        Mode::Strict => match sim.settle_labeled(&next, &format!("step {index}")) {
                            Err(e) => StepOutcome::Failed { reason: e.into() },
                            Ok(report) if report.displaced.contains(&id) => {
                                let displaced = report.displaced.iter().cloned().collect();
                                settles.push((index, report));
                                StepOutcome::Failed {
                                    reason: FailureReason::Unstable { object: id, displaced },
                                }
                            }
                            Ok(report) => {
                                let mut delta = vec![(id.clone(), pose)];
                                delta.extend(
                                    report
                                        .displaced
                                        .iter()
                                        .map(|d| (d.clone(), report.scene.objects[d].pose)),
                                );
                                current = report.scene.clone();
                                settles.push((index, report));
                                StepOutcome::Executed { delta }
                            }
                        },
                    }
                }
            },
        };
        let failed = matches!(outcome, StepOutcome::Failed { .. });
        steps.push(StepRecord { index, outcome });
        if failed && mode == Mode::Strict {
            break;
        }
    }
    if mode == Mode::Permissive {
        match sim.settle_labeled(&current, "plan") {
            Ok(report) => {
                current = report.scene.clone();
                settles.push((plan.steps.len(), report));
            }
            Err(e) => log::warn!("final settle failed: {e}"),
        }
    }
    ExecutionTrace {
        mode,
        steps,
        placed,
        intended,
        initial: scene.clone(),
        final_scene: current,
        settles,
    }
}
