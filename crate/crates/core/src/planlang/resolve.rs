//! Binding references to scene objects.

use std::collections::{BTreeSet, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::sim::{ObjectId, Scene, SceneObject, CONTACT_TOLERANCE};

use super::render::render_ref;
use super::{Action, Descriptor, ObjectRef, Ordinal, Orientation, Plan, PlanError, Region, Size};

/// Placement region with its anchor bound. Anchors are listed bottom to top
/// when the reference named a stack.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum GroundedRegion {
    /// Free spot on the floor, drawn from a generator seeded with `seed`.
    Ground { seed: u64 },
    /// Flush against the anchor on one of the two sides across the line of
    /// sight; `seed` picks the side tried first.
    Beside { anchor: Vec<ObjectId>, seed: u64 },
    /// Flush against the anchor face that looks towards the agent.
    InFrontOf { anchor: Vec<ObjectId> },
    /// Flush against the anchor face away from the agent.
    Behind { anchor: Vec<ObjectId> },
}

impl GroundedRegion {
    pub fn anchor(&self) -> &[ObjectId] {
        match self {
            GroundedRegion::Ground { .. } => &[],
            GroundedRegion::Beside { anchor, .. }
            | GroundedRegion::InFrontOf { anchor }
            | GroundedRegion::Behind { anchor } => anchor,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum GroundedAction {
    PlaceOn {
        object: ObjectId,
        base: Vec<ObjectId>,
        orientation: Option<Orientation>,
    },
    PlaceAt {
        object: ObjectId,
        region: GroundedRegion,
        orientation: Option<Orientation>,
    },
    Rotate {
        object: ObjectId,
        orientation: Orientation,
    },
    Climb {
        target: Vec<ObjectId>,
    },
    Ignore {
        text: String,
    },
    /// A step naming something the scene does not contain.
    Unresolved {
        action: Action,
        reference: String,
    },
}

impl GroundedAction {
    /// Every id the step binds, moved object first.
    pub fn ids(&self) -> Vec<&ObjectId> {
        match self {
            GroundedAction::PlaceOn { object, base, .. } => std::iter::once(object).chain(base).collect(),
            GroundedAction::PlaceAt { object, region, .. } => std::iter::once(object).chain(region.anchor()).collect(),
            GroundedAction::Rotate { object, .. } => vec![object],
            GroundedAction::Climb { target } => target.iter().collect(),
            GroundedAction::Ignore { .. } | GroundedAction::Unresolved { .. } => Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundedPlan {
    pub steps: Vec<GroundedAction>,
    /// Distinct movable objects bound by the steps.
    pub selected: BTreeSet<ObjectId>,
}

impl GroundedPlan {
    pub fn unresolved(&self) -> impl Iterator<Item = (usize, &str)> {
        self.steps.iter().enumerate().filter_map(|(i, s)| match s {
            GroundedAction::Unresolved { reference, .. } => Some((i, reference.as_str())),
            _ => None,
        })
    }

    /// Recomputes [`GroundedPlan::selected`] from the steps.
    pub fn selected_in(&self, scene: &Scene) -> BTreeSet<ObjectId> {
        self.steps
            .iter()
            .flat_map(GroundedAction::ids)
            .filter(|id| scene.objects.get(*id).is_some_and(|o| o.movable))
            .cloned()
            .collect()
    }
}

struct Binder<'a> {
    scene: &'a Scene,
    memo: HashMap<ObjectRef, Vec<ObjectId>>,
    used: BTreeSet<ObjectId>,
    last: Option<Vec<ObjectId>>,
}

fn same_color(obj: &SceneObject, color: &str) -> bool {
    obj.color.as_deref().is_some_and(|c| {
        let c = c.to_ascii_lowercase();
        c == color || (c == "grey" && color == "gray")
    })
}

fn touches_from_below(lower: &SceneObject, upper: &SceneObject) -> bool {
    let (a, b) = (lower.aabb(), upper.aabb());
    (b.min.y - a.max.y).abs() <= 2.0 * CONTACT_TOLERANCE && a.overlaps_horizontally(&b, CONTACT_TOLERANCE)
}

impl<'a> Binder<'a> {
    fn sort_key(&self, r: &ObjectRef, o: &SceneObject) -> (f64, f64, f64) {
        let d = self.scene.distance_to_agent(o);
        let z = o.pose.position.z;
        let primary = match r.position {
            Some(Descriptor::Left) => z,
            Some(Descriptor::Right) => -z,
            Some(Descriptor::Front) => d,
            Some(Descriptor::Back) => -d,
            None => 0.0,
        };
        let secondary = match r.size {
            Some(Size::Large) => -o.volume(),
            Some(Size::Small) => o.volume(),
            None => 0.0,
        };
        (primary, secondary, d)
    }

    /// Matching candidates, best first. Each candidate is a bottom-to-top id run.
    fn candidates(&self, r: &ObjectRef) -> Vec<Vec<ObjectId>> {
        let matching: Vec<&SceneObject> = self
            .scene
            .objects
            .values()
            .filter(|o| o.shape == r.noun)
            .filter(|o| r.color.as_deref().is_none_or(|c| same_color(o, c)))
            .collect();
        let mut groups: Vec<(&SceneObject, Vec<ObjectId>)> = if r.stack {
            let mut stacks = Vec::new();
            for base in &matching {
                if matching.iter().any(|o| o.id != base.id && touches_from_below(o, base)) {
                    continue;
                }
                let mut run = vec![base.id.clone()];
                let mut top = *base;
                while let Some(next) = matching
                    .iter()
                    .find(|o| !run.contains(&o.id) && touches_from_below(top, o))
                {
                    run.push(next.id.clone());
                    top = next;
                }
                if run.len() >= 2 {
                    stacks.push((*base, run));
                }
            }
            stacks
        } else {
            matching.iter().map(|o| (*o, vec![o.id.clone()])).collect()
        };
        groups.sort_by(|(a, _), (b, _)| {
            let (ka, kb) = (self.sort_key(r, a), self.sort_key(r, b));
            ka.0.total_cmp(&kb.0)
                .then(ka.1.total_cmp(&kb.1))
                .then(ka.2.total_cmp(&kb.2))
                .then_with(|| a.id.cmp(&b.id))
        });
        groups.into_iter().map(|(_, ids)| ids).collect()
    }

    fn bind(&mut self, r: &ObjectRef) -> Result<Vec<ObjectId>, PlanError> {
        let unknown = || PlanError::UnknownObject(render_ref(r));
        if r.is_pronoun() {
            return self.last.clone().ok_or_else(unknown);
        }
        if let Some(ids) = self.memo.get(r) {
            return Ok(ids.clone());
        }
        let cands = self.candidates(r);
        let chosen = match r.ordinal {
            Ordinal::Any => cands.into_iter().next(),
            Ordinal::Other => cands.into_iter().find(|c| c.iter().all(|id| !self.used.contains(id))),
            Ordinal::Nth(n) => cands.into_iter().nth(n as usize),
        }
        .ok_or_else(unknown)?;
        self.memo.insert(r.clone(), chosen.clone());
        self.used.extend(chosen.iter().cloned());
        Ok(chosen)
    }

    /// The single object a step moves: the top of a named stack.
    fn bind_one(&mut self, r: &ObjectRef) -> Result<ObjectId, PlanError> {
        let ids = self.bind(r)?;
        Ok(ids.last().cloned().expect("bindings are non-empty"))
    }

    fn action(&mut self, a: &Action, rng: &mut ChaCha8Rng) -> Result<GroundedAction, PlanError> {
        let g = match a {
            Action::PlaceOn {
                object,
                base,
                orientation,
            } => {
                let object = self.bind_one(object)?;
                let base = self.bind(base)?;
                GroundedAction::PlaceOn {
                    object,
                    base,
                    orientation: *orientation,
                }
            }
            Action::PlaceAt {
                object,
                region,
                orientation,
            } => {
                let object = self.bind_one(object)?;
                let region = match region {
                    Region::Ground => GroundedRegion::Ground { seed: rng.random() },
                    Region::Beside(r) => GroundedRegion::Beside {
                        anchor: self.bind(r)?,
                        seed: rng.random(),
                    },
                    Region::InFrontOf(r) => GroundedRegion::InFrontOf { anchor: self.bind(r)? },
                    Region::Behind(r) => GroundedRegion::Behind { anchor: self.bind(r)? },
                };
                GroundedAction::PlaceAt {
                    object,
                    region,
                    orientation: *orientation,
                }
            }
            Action::Rotate { object, orientation } => GroundedAction::Rotate {
                object: self.bind_one(object)?,
                orientation: *orientation,
            },
            Action::Climb { target } => GroundedAction::Climb {
                target: self.bind(target)?,
            },
            Action::Ignore { text } => GroundedAction::Ignore { text: text.clone() },
        };
        if let Some(first) = g.ids().first() {
            self.last = Some(vec![(*first).clone()]);
        }
        Ok(g)
    }
}

fn run(plan: &Plan, scene: &Scene, seed: u64, strict: bool) -> Result<GroundedPlan, PlanError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut binder = Binder {
        scene,
        memo: HashMap::new(),
        used: BTreeSet::new(),
        last: None,
    };
    let mut steps = Vec::with_capacity(plan.steps.len());
    for a in &plan.steps {
        match binder.action(a, &mut rng) {
            Ok(g) => steps.push(g),
            Err(e) if strict => return Err(e),
            Err(PlanError::UnknownObject(reference)) => steps.push(GroundedAction::Unresolved {
                action: a.clone(),
                reference,
            }),
        }
    }
    let mut grounded = GroundedPlan {
        steps,
        selected: BTreeSet::new(),
    };
    grounded.selected = grounded.selected_in(scene);
    Ok(grounded)
}

/// Binds every reference, failing on the first one the scene cannot satisfy.
///
/// Ties go to the object nearest the agent, then to the smaller id. Equal
/// references bind to the same object; "the other" skips objects the plan
/// already uses; "it" is the object of the previous step. Random choices for
/// underspecified placements are drawn here so execution is deterministic.
pub fn resolve(plan: &Plan, scene: &Scene, seed: u64) -> Result<GroundedPlan, PlanError> {
    run(plan, scene, seed, true)
}

/// Like [`resolve`], but keeps going and marks unbindable steps
/// [`GroundedAction::Unresolved`].
pub fn resolve_lenient(plan: &Plan, scene: &Scene, seed: u64) -> GroundedPlan {
    run(plan, scene, seed, false).expect("lenient resolution does not fail")
}
