//! Stability and object-selection scores.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::planlang::{ExecutionTrace, FailureReason, GroundedPlan, Mode};
use crate::sim::{ObjectId, Pose, Scene};

/// Center displacement above which an object counts as moved, metres.
pub const DEFAULT_TOLERANCE: f64 = 0.1;

/// Distance each object moved from `before` to `after`. Objects missing from
/// `after` count as infinitely displaced.
pub fn displacements(before: &BTreeMap<ObjectId, Pose>, after: &Scene) -> BTreeMap<ObjectId, f64> {
    before
        .iter()
        .map(|(id, pose)| {
            let d = after
                .pose(id)
                .map_or(f64::INFINITY, |p| (p.position - pose.position).norm());
            (id.clone(), d)
        })
        .collect()
}

/// Fraction of `displacement` entries within `tolerance`; 1.0 when empty.
pub fn stability_of(displacement: &BTreeMap<ObjectId, f64>, tolerance: f64) -> f64 {
    if displacement.is_empty() {
        return 1.0;
    }
    let stayed = displacement.values().filter(|&&d| d <= tolerance).count();
    stayed as f64 / displacement.len() as f64
}

/// Fraction of `placed` whose center in `after` is within `tolerance` of
/// where it was in `before`.
pub fn stability(before: &Scene, after: &Scene, placed: &BTreeSet<ObjectId>, tolerance: f64) -> f64 {
    let poses: BTreeMap<ObjectId, Pose> = placed
        .iter()
        .filter_map(|id| before.pose(id).map(|p| (id.clone(), p)))
        .collect();
    stability_of(&displacements(&poses, after), tolerance)
}

fn counts<S: AsRef<str>>(items: &[S]) -> BTreeMap<&str, usize> {
    let mut m = BTreeMap::new();
    for s in items {
        *m.entry(s.as_ref()).or_insert(0) += 1;
    }
    m
}

/// Intersection-over-union of two shape multisets.
pub fn multiset_iou<A: AsRef<str>, B: AsRef<str>>(a: &[A], b: &[B]) -> f64 {
    let (ca, cb) = (counts(a), counts(b));
    let inter: usize = ca.iter().map(|(k, n)| (*n).min(cb.get(k).copied().unwrap_or(0))).sum();
    let union = a.len() + b.len() - inter;
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

/// Best IoU of the selected shapes against any reference, and which
/// reference gave it (the first on ties). Selecting nothing scores 0.
pub fn iou<S: AsRef<str>>(selected: &[S], references: &[Vec<String>]) -> (f64, Option<usize>) {
    let mut best = (0.0, None);
    if selected.is_empty() {
        return best;
    }
    for (i, r) in references.iter().enumerate() {
        let v = multiset_iou(selected, r);
        if best.1.is_none() || v > best.0 {
            best = (v, Some(i));
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepFailure {
    pub step: usize,
    pub reason: FailureReason,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub mode: Mode,
    pub stability: f64,
    pub iou: f64,
    /// Index into the scenario's reference sets.
    pub reference_used: Option<usize>,
    /// First failed step.
    pub failure_step: Option<usize>,
    pub failures: Vec<StepFailure>,
    pub per_object_displacement: BTreeMap<ObjectId, f64>,
    pub selected: Vec<ObjectId>,
    pub selected_shapes: Vec<String>,
    /// Whether the goal height can be climbed to in the final scene, when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reachable: Option<bool>,
}

impl EvalReport {
    pub fn has_failure(&self, pred: impl Fn(&FailureReason) -> bool) -> bool {
        self.failures.iter().any(|f| pred(&f.reason))
    }
}

/// Scores an execution.
pub fn report(trace: &ExecutionTrace, plan: &GroundedPlan, references: &[Vec<String>], tolerance: f64) -> EvalReport {
    let per_object_displacement = displacements(&trace.intended, &trace.final_scene);
    let selected: Vec<ObjectId> = plan.selected.iter().cloned().collect();
    let selected_shapes: Vec<String> = selected
        .iter()
        .filter_map(|id| trace.initial.objects.get(id).map(|o| o.shape.clone()))
        .collect();
    let (iou, reference_used) = iou(&selected_shapes, references);
    let failures: Vec<StepFailure> = trace
        .failures()
        .map(|(step, reason)| StepFailure {
            step,
            reason: reason.clone(),
        })
        .collect();
    EvalReport {
        mode: trace.mode,
        stability: stability_of(&per_object_displacement, tolerance),
        iou,
        reference_used,
        failure_step: failures.first().map(|f| f.step),
        failures,
        per_object_displacement,
        selected,
        selected_shapes,
        reachable: None,
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    fn v(items: &[&str]) -> Vec<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    /// Instance-level oracle: tries every injective matching of selected
    /// instances onto reference instances of the same shape.
    fn brute_iou(a: &[String], b: &[String]) -> f64 {
        fn best(a: &[String], b: &[String], used: &mut Vec<bool>) -> usize {
            let Some((first, rest)) = a.split_first() else { return 0 };
            let mut m = best(rest, b, used);
            for j in 0..b.len() {
                if !used[j] && b[j] == *first {
                    used[j] = true;
                    m = m.max(1 + best(rest, b, used));
                    used[j] = false;
                }
            }
            m
        }
        let inter = best(a, b, &mut vec![false; b.len()]);
        let union = a.len() + b.len() - inter;
        if union == 0 {
            0.0
        } else {
            inter as f64 / union as f64
        }
    }

    #[test]
    fn iou_examples() {
        let refs = vec![v(&["cube", "cube", "cylinder"]), v(&["cylinder", "cylinder", "cube"])];
        assert_eq!(iou(&v(&["cube", "cube", "cylinder"]), &refs), (1.0, Some(0)));
        assert_eq!(iou(&v(&["cube", "sphere", "cylinder"]), &refs).0, 0.5);
        assert_eq!(iou(&Vec::<String>::new(), &refs), (0.0, None));
        assert_eq!(iou(&v(&["cylinder", "cylinder", "cube"]), &refs), (1.0, Some(1)));
    }

    #[test]
    fn stability_examples() {
        let mut before = BTreeMap::new();
        before.insert("cube".to_string(), Pose::at(0.0, 1.5, 0.0));
        before.insert("sphere".to_string(), Pose::at(0.0, 0.5, 0.0));
        let mut scene = Scene::empty(crate::sim::Agent::default());
        for (id, x) in [("cube", 1.0), ("sphere", 0.0)] {
            scene.objects.insert(
                id.into(),
                crate::sim::SceneObject {
                    id: id.into(),
                    shape: id.into(),
                    dimensions: crate::Vec3::new(1.0, 1.0, 1.0),
                    pose: Pose::at(x, 0.5, 0.0),
                    movable: true,
                    color: None,
                },
            );
        }
        assert_eq!(stability_of(&displacements(&before, &scene), DEFAULT_TOLERANCE), 0.5);
        assert_eq!(stability_of(&BTreeMap::new(), DEFAULT_TOLERANCE), 1.0);
        let placed: BTreeSet<ObjectId> = ["sphere".to_string()].into();
        assert_eq!(stability(&scene, &scene, &placed, DEFAULT_TOLERANCE), 1.0);
    }

    fn shapes() -> impl Strategy<Value = Vec<String>> {
        prop::collection::vec(prop::sample::select(vec!["cube", "cylinder", "sphere"]), 0..=6)
            .prop_map(|v| v.into_iter().map(String::from).collect())
    }

    proptest! {
        #[test]
        fn iou_matches_enumeration(a in shapes(), b in shapes()) {
            prop_assert!((multiset_iou(&a, &b) - brute_iou(&a, &b)).abs() < 1e-15);
        }

        #[test]
        fn iou_is_symmetric_and_bounded(a in shapes(), b in shapes()) {
            let x = multiset_iou(&a, &b);
            prop_assert_eq!(x, multiset_iou(&b, &a));
            prop_assert!((0.0..=1.0).contains(&x));
            if !a.is_empty() {
                prop_assert_eq!(multiset_iou(&a, &a), 1.0);
            }
            let disjoint = !a.iter().any(|s| b.contains(s));
            prop_assert_eq!(x == 0.0, disjoint);
        }

        #[test]
        fn stability_is_monotone(d in prop::collection::vec(0.0f64..1.0, 1..8), extra in 0usize..8) {
            let mut m: BTreeMap<ObjectId, f64> = d.iter().enumerate().map(|(i, x)| (format!("o{i}"), *x)).collect();
            let s0 = stability_of(&m, DEFAULT_TOLERANCE);
            if let Some(k) = m.keys().nth(extra % m.len()).cloned() {
                m.insert(k, 5.0);
            }
            prop_assert!(stability_of(&m, DEFAULT_TOLERANCE) <= s0);
        }
    }
}
