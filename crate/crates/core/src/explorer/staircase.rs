use serde::{Deserialize, Serialize};

use crate::geometry::{Aabb, Rotation, Vec3};
use crate::planlang::{operationalize, render, resolve, Action, Mode, ObjectRef, Ordinal, Orientation, Plan, Region};
use crate::sim::{ObjectId, Scene, Simulator, CONTACT_TOLERANCE};
use crate::voxkb::{Axis, UpConstraint, UP_TOLERANCE_RAD};

use super::model::{ground, Grounding, GroundingModel};
use super::probe::{featurize, habitat_rotation, probe_in, ProbeSource};
use super::{ExplorerError, Label};

/// Objects whose heights differ by more than this are not interchangeable
/// staircase steps, metres.
const HEIGHT_SLACK: f64 = 0.05;

/// Sides of the platform a staircase may be built on, in order of preference.
const SIDES: [fn(ObjectRef) -> Region; 2] = [Region::InFrontOf, Region::Behind];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HabitatDecision {
    /// Index into the voxeme's habitats.
    pub habitat: usize,
    pub up: String,
    pub rotation: Rotation,
    /// How a plan asks for this habitat; `None` keeps the current rotation.
    pub orientation: Option<Orientation>,
    /// Whether a plan can express the habitat at all.
    pub plannable: bool,
    /// Height of the object standing in this habitat.
    pub height: f64,
    pub grounding: Grounding,
    /// Every habitat probed, in order, with its grounded label.
    pub tried: Vec<(String, Label)>,
}

/// Probes each habitat of `id` in knowledge-base order and returns the first
/// one whose behavior grounds as flat.
pub fn determine_habitat(
    sim: &Simulator,
    scene: &Scene,
    id: &str,
    model: &GroundingModel,
) -> Result<HabitatDecision, ExplorerError> {
    let obj = scene.get(id)?;
    if !obj.movable {
        return Err(ExplorerError::Immovable(id.to_string()));
    }
    let voxeme = sim.kb().lookup(&obj.shape)?;
    let current = obj.pose.rotation;
    let mut tried = Vec::new();
    for (i, h) in voxeme.habitats.iter().enumerate() {
        let rotation = habitat_rotation(&h.up, &current);
        let trace = probe_in(sim, scene, id, rotation, [0.0, 0.0])?;
        let source = ProbeSource {
            shape: obj.shape.clone(),
            orientation: h.up.to_string(),
            trace_id: format!("{id}/{i}"),
        };
        let grounding = ground(model, &model.embed(&featurize(&trace)?, source));
        tried.push((h.up.to_string(), grounding.label));
        if grounding.label != Label::Flat {
            continue;
        }
        let satisfied = h.up.deviation(&current) <= UP_TOLERANCE_RAD;
        let upright = matches!(h.up, UpConstraint::Along(sa) if sa.axis == Axis::Y && sa.positive);
        let (orientation, plannable) = match (satisfied, upright) {
            (true, _) => (None, true),
            (false, true) => (Some(Orientation::Upright), true),
            (false, false) => (None, false),
        };
        let rotation = if satisfied { current } else { rotation };
        return Ok(HabitatDecision {
            habitat: i,
            up: h.up.to_string(),
            rotation,
            orientation,
            plannable,
            height: 2.0 * Aabb::of_box(&Vec3::zeros(), &obj.dimensions, &rotation).max.y,
            grounding,
            tried,
        });
    }
    Err(ExplorerError::NoFlatHabitat(id.to_string()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StaircaseGoal {
    /// Height the agent must stand at, metres.
    pub height: f64,
    pub jump: f64,
    /// Structure to build against; the nearest one tall enough when unset.
    pub platform: Option<ObjectId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Staircase {
    pub plan: Plan,
    pub text: String,
    pub platform: ObjectId,
    pub levels: usize,
    /// Objects used, in plan order.
    pub objects: Vec<ObjectId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "phase", content = "object", rename_all = "snake_case")]
pub enum Phase {
    Traverse,
    Probe(ObjectId),
    Build,
    Done,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectDecision {
    pub id: ObjectId,
    pub shape: String,
    pub distance: f64,
    /// Label of the last habitat probed: flat if one was found.
    pub label: Option<Label>,
    pub habitat: Option<HabitatDecision>,
    pub used: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exploration {
    pub phases: Vec<Phase>,
    pub decisions: Vec<ObjectDecision>,
    pub staircase: Staircase,
}

fn pick_platform(scene: &Scene, goal: &StaircaseGoal) -> Result<ObjectId, ExplorerError> {
    if let Some(p) = &goal.platform {
        scene.get(p)?;
        return Ok(p.clone());
    }
    scene
        .objects
        .values()
        .filter(|o| !o.movable && o.aabb().max.y >= goal.height - CONTACT_TOLERANCE)
        .min_by(|a, b| {
            scene
                .distance_to_agent(a)
                .total_cmp(&scene.distance_to_agent(b))
                .then_with(|| a.id.cmp(&b.id))
        })
        .map(|o| o.id.clone())
        .ok_or_else(|| ExplorerError::Unsolvable("nothing stands at the goal height".into()))
}

/// Reference that binds to exactly `id`: its rank among same-shaped objects
/// by distance to the agent.
fn reference(scene: &Scene, id: &str) -> ObjectRef {
    let obj = &scene.objects[id];
    let mut same: Vec<_> = scene.objects.values().filter(|o| o.shape == obj.shape).collect();
    same.sort_by(|a, b| {
        scene
            .distance_to_agent(a)
            .total_cmp(&scene.distance_to_agent(b))
            .then_with(|| a.id.cmp(&b.id))
    });
    let rank = same.iter().position(|o| o.id == id).expect("object is in the scene");
    ObjectRef::new(&obj.shape).nth(Ordinal::Nth(rank as u8))
}

/// Columns of height `levels, levels - 1, ..., 1` stepping down from the
/// platform on one side, built one layer at a time.
fn layout(
    scene: &Scene,
    platform: &str,
    levels: usize,
    parts: &[(ObjectId, Option<Orientation>)],
    side: fn(ObjectRef) -> Region,
) -> (Plan, Vec<ObjectId>) {
    let mut columns: Vec<Vec<ObjectId>> = vec![Vec::new(); levels];
    let mut steps = Vec::new();
    let mut used = Vec::new();
    let mut next = parts.iter();
    for layer in 0..levels {
        for c in 0..levels - layer {
            let (id, orientation) = next.next().expect("enough parts");
            let object = reference(scene, id);
            let action = if layer == 0 {
                let anchor = if c == 0 {
                    reference(scene, platform)
                } else {
                    reference(scene, &columns[c - 1][0])
                };
                Action::PlaceAt {
                    object,
                    region: side(anchor),
                    orientation: *orientation,
                }
            } else {
                Action::PlaceOn {
                    object,
                    base: reference(scene, &columns[c][layer - 1]),
                    orientation: *orientation,
                }
            };
            steps.push(action);
            columns[c].push(id.clone());
            used.push(id.clone());
        }
    }
    steps.push(Action::Climb {
        target: reference(scene, platform),
    });
    (Plan { steps }, used)
}

/// Runs the plan in strict mode and checks the goal can be climbed to.
fn validate(sim: &Simulator, scene: &Scene, plan: &Plan, goal: &StaircaseGoal) -> Result<(), ExplorerError> {
    let unsolvable = |m: String| ExplorerError::Unsolvable(m);
    let grounded = resolve(plan, scene, 0).map_err(|e| unsolvable(e.to_string()))?;
    let trace = operationalize(sim, &grounded, scene, Mode::Strict);
    if let Some((i, reason)) = trace.first_failure() {
        return Err(unsolvable(format!("layout fails at step {i}: {reason:?}")));
    }
    let agent = crate::sim::Agent {
        jump_height: goal.jump,
        ..scene.agent.clone()
    };
    if !sim.reachable(&trace.final_scene, &agent, goal.height)?.reachable {
        return Err(unsolvable("layout does not reach the goal height".into()));
    }
    Ok(())
}

/// Visits ground-resting objects nearest-first, finds a flat habitat for
/// each and, once enough steps are known, lays them out as a staircase in
/// front of the platform, or behind it when the front is blocked. The
/// layout is checked by executing it.
pub fn explore(
    sim: &Simulator,
    scene: &Scene,
    model: &GroundingModel,
    goal: &StaircaseGoal,
) -> Result<Exploration, ExplorerError> {
    let platform = pick_platform(scene, goal)?;
    let tol = sim.params.contact_tolerance;
    let mut order: Vec<_> = scene
        .movables()
        .filter(|o| o.aabb().min.y <= tol)
        .map(|o| (scene.distance_to_agent(o), o.id.clone(), o.shape.clone()))
        .collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
    let mut queue = order.into_iter();

    let mut phases = Vec::new();
    let mut decisions: Vec<ObjectDecision> = Vec::new();
    let mut parts: Vec<(ObjectId, Option<Orientation>)> = Vec::new();
    let mut step_height: Option<f64> = None;
    let needed = |h: f64| {
        let levels = ((goal.height / h) - 1e-6).ceil().max(1.0) as usize;
        (levels, levels * (levels + 1) / 2)
    };
    let mut phase = Phase::Traverse;
    loop {
        phases.push(phase.clone());
        phase = match phase {
            Phase::Traverse => {
                if step_height.is_some_and(|h| parts.len() >= needed(h).1) {
                    Phase::Build
                } else if let Some((distance, id, shape)) = queue.next() {
                    decisions.push(ObjectDecision {
                        id: id.clone(),
                        shape,
                        distance,
                        label: None,
                        habitat: None,
                        used: false,
                        note: None,
                    });
                    Phase::Probe(id)
                } else {
                    let have = parts.len();
                    return Err(ExplorerError::Unsolvable(format!(
                        "found {have} usable flat objects, need {}",
                        step_height.map_or(1, |h| needed(h).1)
                    )));
                }
            }
            Phase::Probe(id) => {
                let d = decisions.last_mut().expect("pushed on traverse");
                match determine_habitat(sim, scene, &id, model) {
                    Ok(h) => {
                        d.label = Some(Label::Flat);
                        let reference_height = step_height.unwrap_or(h.height);
                        if !h.plannable {
                            d.note = Some("flat habitat cannot be requested in a plan".into());
                        } else if h.height > goal.jump + tol {
                            d.note = Some("too tall to climb onto".into());
                        } else if (h.height - reference_height).abs() > HEIGHT_SLACK {
                            d.note = Some("height differs from the other steps".into());
                        } else {
                            d.used = true;
                            step_height = Some(reference_height);
                            parts.push((id.clone(), h.orientation));
                        }
                        d.habitat = Some(h);
                    }
                    Err(ExplorerError::NoFlatHabitat(_)) => {
                        d.label = Some(Label::Round);
                        d.note = Some("no flat habitat".into());
                    }
                    Err(e @ ExplorerError::ProbeBlocked { .. }) => d.note = Some(e.to_string()),
                    Err(e) => return Err(e),
                }
                Phase::Traverse
            }
            Phase::Build => break,
            Phase::Done => unreachable!("loop exits on build"),
        };
    }
    let (levels, count) = needed(step_height.expect("set before build"));
    let mut built = Err(ExplorerError::Unsolvable("no side to build on".into()));
    for side in SIDES {
        let (plan, objects) = layout(scene, &platform, levels, &parts[..count], side);
        match validate(sim, scene, &plan, goal) {
            Ok(()) => {
                built = Ok((plan, objects));
                break;
            }
            Err(e @ ExplorerError::Unsolvable(_)) => built = Err(e),
            Err(e) => return Err(e),
        }
    }
    let (plan, objects) = built?;
    phases.push(Phase::Done);
    Ok(Exploration {
        phases,
        decisions,
        staircase: Staircase {
            text: render(&plan),
            plan,
            platform,
            levels,
            objects,
        },
    })
}

/// The staircase part of [`explore`].
pub fn synthesize_staircase(
    sim: &Simulator,
    scene: &Scene,
    goal: &StaircaseGoal,
    model: &GroundingModel,
) -> Result<Staircase, ExplorerError> {
    explore(sim, scene, model, goal).map(|e| e.staircase)
}
