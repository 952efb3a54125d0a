use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::explorer::{
    explore, probe_dataset, train_similarity, GroundingModel, ObjectDecision, Phase, StaircaseGoal, TrainParams,
    TRAINING_SHAPES,
};
use crate::metrics::{self, EvalReport, DEFAULT_TOLERANCE};
use crate::planlang::{operationalize, parse, resolve, resolve_lenient, ExecutionTrace, Mode, Plan};
use crate::sim::{Scenario, ScenarioRegistry, Scene, Simulator};

use super::client::ChatClient;
use super::prompt::build_prompt;
use super::transcript::{now_timestamp, TranscriptRecord, TranscriptStore};
use super::{HarnessError, ModelSource, PromptVariant, RunConfig};

/// Outcome of one run. Exactly one of `report` and `skipped` is set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub scenario: String,
    pub variant: PromptVariant,
    pub model: String,
    pub mode: Mode,
    pub seed: u64,
    pub response: Option<String>,
    pub report: Option<EvalReport>,
    /// Why no report was produced.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub skipped: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub repair: Option<Repair>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub repair_error: Option<String>,
}

/// Explorer-built replacement for a failed plan, scored from the scene the
/// failure left behind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Repair {
    pub text: String,
    pub phases: Vec<Phase>,
    pub decisions: Vec<ObjectDecision>,
    pub report: EvalReport,
}

/// Scores a response against a scenario: parse, ground, execute, measure.
pub fn score(
    sim: &Simulator,
    scenario: &Scenario,
    text: &str,
    mode: Mode,
    seed: u64,
    tolerance: f64,
) -> Result<EvalReport, HarnessError> {
    let scene = sim.spawn(&scenario.scene)?;
    Ok(score_in(sim, scenario, &scene, &parse(text), mode, seed, tolerance)?.0)
}

fn score_in(
    sim: &Simulator,
    scenario: &Scenario,
    scene: &Scene,
    plan: &Plan,
    mode: Mode,
    seed: u64,
    tolerance: f64,
) -> Result<(EvalReport, ExecutionTrace), HarnessError> {
    let grounded = resolve_lenient(plan, scene, seed);
    let trace = operationalize(sim, &grounded, scene, mode);
    let mut report = metrics::report(&trace, &grounded, &scenario.references, tolerance);
    report.reachable = Some(
        sim.reachable(&trace.final_scene, &scene.agent, scenario.goal_height)?
            .reachable,
    );
    Ok((report, trace))
}

/// Shared state for runs: simulator, scenarios, endpoint client, grounding
/// models by seed and one transcript store per path.
#[derive(Debug)]
pub struct Harness {
    pub sim: Simulator,
    pub registry: ScenarioRegistry,
    pub tolerance: f64,
    client: ChatClient,
    fixed_model: Option<Arc<GroundingModel>>,
    models: Mutex<HashMap<u64, Arc<GroundingModel>>>,
    stores: Mutex<HashMap<PathBuf, Arc<TranscriptStore>>>,
}

impl Harness {
    pub fn new(sim: Simulator, registry: ScenarioRegistry) -> Self {
        Harness {
            sim,
            registry,
            tolerance: DEFAULT_TOLERANCE,
            client: ChatClient::from_env(),
            fixed_model: None,
            models: Mutex::new(HashMap::new()),
            stores: Mutex::new(HashMap::new()),
        }
    }

    pub fn builtin() -> Self {
        Self::new(Simulator::with_builtin_kb(), ScenarioRegistry::builtin())
    }

    pub fn with_client(mut self, client: ChatClient) -> Self {
        self.client = client;
        self
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    /// Uses `model` for every seed instead of training one.
    pub fn with_grounding_model(mut self, model: GroundingModel) -> Self {
        self.fixed_model = Some(Arc::new(model));
        self
    }

    /// The supplied model, or one trained on the standard shapes with `seed`.
    pub fn grounding_model(&self, seed: u64) -> Result<Arc<GroundingModel>, HarnessError> {
        if let Some(m) = &self.fixed_model {
            return Ok(m.clone());
        }
        let mut models = self.models.lock().unwrap_or_else(|p| p.into_inner());
        if let Some(m) = models.get(&seed) {
            return Ok(m.clone());
        }
        let data = probe_dataset(&self.sim, &TRAINING_SHAPES, seed)?;
        let m = Arc::new(train_similarity(&data, seed, TrainParams::default())?);
        models.insert(seed, m.clone());
        Ok(m)
    }

    fn store(&self, path: &PathBuf) -> Arc<TranscriptStore> {
        let mut stores = self.stores.lock().unwrap_or_else(|p| p.into_inner());
        stores
            .entry(path.clone())
            .or_insert_with(|| Arc::new(TranscriptStore::new(path.clone())))
            .clone()
    }

    pub fn score_text(&self, scenario: &str, text: &str, mode: Mode, seed: u64) -> Result<EvalReport, HarnessError> {
        score(
            &self.sim,
            self.registry.get(scenario)?,
            text,
            mode,
            seed,
            self.tolerance,
        )
    }

    pub fn run(&self, config: &RunConfig) -> RunRecord {
        let mut record = RunRecord {
            scenario: config.scenario.clone(),
            variant: config.variant,
            model: String::new(),
            mode: config.mode,
            seed: config.seed,
            response: None,
            report: None,
            skipped: None,
            repair: None,
            repair_error: None,
        };
        let response = match &config.source {
            ModelSource::Live(live) => {
                record.model = live.model.clone();
                self.live_response(config, live)
            }
            ModelSource::Canned { transcript, model } => {
                record.model = model.clone().unwrap_or_else(|| "unknown".into());
                self.canned_response(config, transcript, model.as_deref()).map(|r| {
                    record.model = r.model_name.clone();
                    r.response_text
                })
            }
        };
        let response = match response {
            Ok(r) => r,
            Err(e) => {
                log::warn!("run {}/{} skipped: {e}", config.scenario, config.variant);
                record.skipped = Some(e.to_string());
                return record;
            }
        };
        record.response = Some(response.clone());
        match self.evaluate(config, &response) {
            Ok((report, repair)) => {
                record.report = Some(report);
                match repair {
                    Some(Ok(r)) => record.repair = Some(r),
                    Some(Err(e)) => record.repair_error = Some(e.to_string()),
                    None => {}
                }
            }
            Err(e) => record.skipped = Some(e.to_string()),
        }
        record
    }

    fn live_response(&self, config: &RunConfig, live: &super::LiveSource) -> Result<String, HarnessError> {
        let prompt = build_prompt(&self.registry, config.variant, &config.scenario)?;
        let response = self.client.complete(live, &prompt)?;
        self.store(&live.transcript).append(&TranscriptRecord {
            model_name: live.model.clone(),
            prompt_variant: config.variant,
            scenario: config.scenario.clone(),
            prompt_text: prompt,
            response_text: response.clone(),
            timestamp: now_timestamp(),
            source: Some("live".into()),
        })?;
        Ok(response)
    }

    fn canned_response(
        &self,
        config: &RunConfig,
        transcript: &PathBuf,
        model: Option<&str>,
    ) -> Result<TranscriptRecord, HarnessError> {
        self.registry.get(&config.scenario)?;
        TranscriptStore::read(transcript)?
            .into_iter()
            .find(|r| {
                r.scenario == config.scenario
                    && r.prompt_variant == config.variant
                    && model.is_none_or(|m| m == r.model_name)
            })
            .ok_or_else(|| HarnessError::Transcript {
                line: 0,
                detail: format!(
                    "no {} response for `{}`{} in {}",
                    config.variant,
                    config.scenario,
                    model.map(|m| format!(" from `{m}`")).unwrap_or_default(),
                    transcript.display()
                ),
            })
    }

    #[allow(clippy::type_complexity)]
    fn evaluate(
        &self,
        config: &RunConfig,
        response: &str,
    ) -> Result<(EvalReport, Option<Result<Repair, HarnessError>>), HarnessError> {
        let sc = self.registry.get(&config.scenario)?;
        let scene = self.sim.spawn(&sc.scene)?;
        let (report, trace) = score_in(
            &self.sim,
            sc,
            &scene,
            &parse(response),
            config.mode,
            config.seed,
            self.tolerance,
        )?;
        let repair = (config.explore && config.mode == Mode::Strict && report.failure_step.is_some())
            .then(|| self.repair(sc, &trace.final_scene, config.seed));
        Ok((report, repair))
    }

    /// Explores `scene` and scores the staircase it builds there.
    pub fn repair(&self, scenario: &Scenario, scene: &Scene, seed: u64) -> Result<Repair, HarnessError> {
        let model = self.grounding_model(seed)?;
        let goal = StaircaseGoal {
            height: scenario.goal_height,
            jump: scene.agent.jump_height,
            platform: scenario.target_platform.clone(),
        };
        let e = explore(&self.sim, scene, &model, &goal)?;
        let grounded = resolve(&e.staircase.plan, scene, seed)?;
        let trace = operationalize(&self.sim, &grounded, scene, Mode::Strict);
        let mut report = metrics::report(&trace, &grounded, &scenario.references, self.tolerance);
        report.reachable = Some(
            self.sim
                .reachable(&trace.final_scene, &scene.agent, scenario.goal_height)?
                .reachable,
        );
        Ok(Repair {
            text: e.staircase.text,
            phases: e.phases,
            decisions: e.decisions,
            report,
        })
    }

    /// Re-scores every record of a transcript.
    pub fn replay(&self, records: &[TranscriptRecord], mode: Mode, seed: u64) -> Vec<RunRecord> {
        records
            .iter()
            .map(|r| {
                let mut out = RunRecord {
                    scenario: r.scenario.clone(),
                    variant: r.prompt_variant,
                    model: r.model_name.clone(),
                    mode,
                    seed,
                    response: Some(r.response_text.clone()),
                    report: None,
                    skipped: None,
                    repair: None,
                    repair_error: None,
                };
                match self.score_text(&r.scenario, &r.response_text, mode, seed) {
                    Ok(rep) => out.report = Some(rep),
                    Err(e) => out.skipped = Some(e.to_string()),
                }
                out
            })
            .collect()
    }
}

/// One JSON object per line.
pub fn to_jsonl(records: &[RunRecord]) -> String {
    records
        .iter()
        .map(|r| serde_json::to_string(r).expect("run records serialize") + "\n")
        .collect()
}
