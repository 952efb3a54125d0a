use serde::{Deserialize, Serialize};

use crate::metrics::{self, EvalReport, DEFAULT_TOLERANCE};
use crate::planlang::{operationalize, parse, resolve_lenient, FailureReason, Mode};
use crate::sim::{Scene, Simulator};

use super::losses::{combined_loss, Lambda, LossTerms};
use super::DistillError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredResponse {
    pub text: String,
    pub report: EvalReport,
    pub good: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreferencePair {
    pub prompt_id: String,
    pub good: ScoredResponse,
    pub bad: ScoredResponse,
}

/// Runs one response through the simulator in permissive mode. It is good
/// when it does something, everything it places stays put, and no step
/// collides or names a missing object.
pub fn score_response(
    sim: &Simulator,
    scene: &Scene,
    references: &[Vec<String>],
    text: &str,
    seed: u64,
) -> ScoredResponse {
    let plan = parse(text);
    let grounded = resolve_lenient(&plan, scene, seed);
    let trace = operationalize(sim, &grounded, scene, Mode::Permissive);
    let report = metrics::report(&trace, &grounded, references, DEFAULT_TOLERANCE);
    let violation =
        report.has_failure(|r| matches!(r, FailureReason::Collision { .. } | FailureReason::UnknownObject { .. }));
    let good = plan.actionable() > 0 && report.stability == 1.0 && !violation;
    ScoredResponse {
        text: text.to_string(),
        report,
        good,
    }
}

/// Every (good, bad) combination of the scored responses, in input order.
pub fn label_preference(
    sim: &Simulator,
    scene: &Scene,
    references: &[Vec<String>],
    prompt_id: &str,
    responses: &[String],
    seed: u64,
) -> Vec<PreferencePair> {
    let scored: Vec<ScoredResponse> = responses
        .iter()
        .map(|r| score_response(sim, scene, references, r, seed))
        .collect();
    let (good, bad): (Vec<_>, Vec<_>) = scored.into_iter().partition(|s| s.good);
    good.iter()
        .flat_map(|g| {
            bad.iter().map(move |b| PreferencePair {
                prompt_id: prompt_id.to_string(),
                good: g.clone(),
                bad: b.clone(),
            })
        })
        .collect()
}

/// Grid point whose validation losses have the smallest mean total.
/// `validate` reports the loss terms of the model trained under a given
/// weighting. Ties go to the lexicographically smallest weights.
pub fn tune_lambda(grid: &[Lambda], validate: impl Fn(&Lambda) -> Vec<LossTerms>) -> Result<Lambda, DistillError> {
    let mut best: Option<(f64, Lambda)> = None;
    for lambda in grid {
        combined_loss(*lambda, LossTerms::default())?;
        let terms = validate(lambda);
        if terms.is_empty() {
            return Err(DistillError::EmptyValidation);
        }
        let mut total = 0.0;
        for t in &terms {
            total += combined_loss([1.0; 3], *t)?;
        }
        let mean = total / terms.len() as f64;
        let better = match &best {
            None => true,
            Some((m, l)) => mean < *m || (mean == *m && lex_less(lambda, l)),
        };
        if better {
            best = Some((mean, *lambda));
        }
    }
    best.map(|(_, l)| l).ok_or(DistillError::EmptyGrid)
}

fn lex_less(a: &Lambda, b: &Lambda) -> bool {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .is_some_and(|o| o.is_lt())
}
