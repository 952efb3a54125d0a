use std::fmt::Write as _;
use std::io::{ErrorKind, Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use stackeval_core::distill::{evaluate, TensorFile, DEFAULT_MARGIN};
use stackeval_core::harness::{
    batch, to_jsonl, Harness, LiveSource, ModelSource, PromptVariant, RunConfig, Settings, TranscriptStore,
};
use stackeval_core::metrics::DEFAULT_TOLERANCE;
use stackeval_core::planlang::{operationalize, parse, resolve_lenient};
use stackeval_core::sim::ScenarioRegistry;
use stackeval_core::{Mode, Simulator, VoxKb};

const DEFAULT_CONFIG: &str = "stackeval.toml";

#[derive(Parser)]
#[command(name = "stackeval", version, about = "Evaluate stacking plans in a simulated world")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Settings file; `stackeval.toml` in the working directory is used when present.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Voxeme knowledge base replacing the built-in one.
    #[arg(long, global = true)]
    voxkb: Option<PathBuf>,
    /// Displacement, in metres, above which a placed object counts as moved.
    #[arg(long, global = true)]
    tolerance: Option<f64>,
    /// strict or permissive.
    #[arg(long, global = true)]
    mode: Option<Mode>,
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Prompt a model (live endpoint or recorded transcript) and score its answer.
    Run {
        /// Scenario id or scenario file.
        #[arg(long)]
        scenario: String,
        #[arg(long, default_value = "free-text")]
        variant: PromptVariant,
        /// Recorded responses, or where live responses are appended.
        #[arg(long)]
        transcript: Option<PathBuf>,
        /// Chat-completions base URL; enables live mode.
        #[arg(long)]
        endpoint: Option<String>,
        #[arg(long)]
        model: Option<String>,
        #[arg(long)]
        temperature: Option<f64>,
        /// Repair a failed strict-mode plan with the explorer.
        #[arg(long)]
        explore: bool,
    },
    /// Score a plan text against a scenario.
    Score {
        #[arg(long)]
        scenario: String,
        /// File holding the plan; stdin when omitted.
        #[arg(long)]
        plan: Option<PathBuf>,
        /// Plan text given inline.
        text: Option<String>,
    },
    /// Score every response in a transcript and aggregate per model and variant.
    Batch {
        #[arg(long)]
        transcript: Option<PathBuf>,
        /// Only runs for this scenario.
        #[arg(long)]
        scenario: Option<String>,
        /// Only runs for this prompt variant.
        #[arg(long)]
        variant: Option<PromptVariant>,
        #[arg(long, default_value_t = 4)]
        workers: usize,
        /// Write per-run records here as JSON lines.
        #[arg(long)]
        records: Option<PathBuf>,
        /// Print the aggregate as JSON instead of a table.
        #[arg(long)]
        json: bool,
    },
    /// Run a plan, then explore the resulting scene and build a staircase.
    Explore {
        #[arg(long)]
        scenario: String,
        /// Plan to execute first; exploration starts from where it leaves the scene.
        #[arg(long)]
        plan: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Evaluate distillation losses stored in a tensor file.
    Losses {
        #[arg(long)]
        input: PathBuf,
        /// Contrastive, attention and embedding weights.
        #[arg(long, default_value = "1,1,1")]
        lambda: String,
        #[arg(long, default_value_t = DEFAULT_MARGIN)]
        margin: f64,
    },
    /// Re-score every transcript record, one JSON report per line.
    Replay {
        #[arg(long)]
        transcript: Option<PathBuf>,
    },
}

fn settings(
    common: &Common,
    transcript: Option<&PathBuf>,
    live: Option<(&Option<String>, &Option<String>, &Option<f64>)>,
) -> Result<Settings> {
    let mut cli = Settings {
        mode: common.mode,
        seed: common.seed,
        tolerance: common.tolerance,
        voxkb: common.voxkb.clone(),
        transcript: transcript.cloned(),
        ..Settings::default()
    };
    if let Some((endpoint, model, temperature)) = live {
        cli.endpoint = endpoint.clone();
        cli.model = model.clone();
        cli.temperature = *temperature;
    }
    let file = match &common.config {
        Some(p) => Settings::load(p).with_context(|| format!("reading {}", p.display()))?,
        None if Path::new(DEFAULT_CONFIG).exists() => Settings::load(Path::new(DEFAULT_CONFIG))?,
        None => Settings::default(),
    };
    Ok(cli.or(Settings::from_env()?).or(file))
}

fn harness(s: &Settings) -> Result<Harness> {
    let sim = match &s.voxkb {
        Some(p) => Simulator::new(Arc::new(
            VoxKb::load(p).with_context(|| format!("loading {}", p.display()))?,
        )),
        None => Simulator::with_builtin_kb(),
    };
    Ok(Harness::new(sim, ScenarioRegistry::builtin()).with_tolerance(s.tolerance.unwrap_or(DEFAULT_TOLERANCE)))
}

/// Registers a scenario given by id or path and returns its id.
fn scenario_id(h: &mut Harness, key: &str) -> Result<String> {
    let sc = h.registry.resolve(key)?;
    let id = sc.id.clone();
    h.registry.insert(sc);
    Ok(id)
}

fn transcript_path(s: &Settings) -> Result<PathBuf> {
    s.transcript.clone().context("--transcript is required")
}

fn parse_lambda(s: &str) -> Result<[f64; 3]> {
    let v: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .with_context(|| format!("bad --lambda `{s}`"))?;
    match v[..] {
        [a, b, c] => Ok([a, b, c]),
        _ => bail!("--lambda takes three comma-separated weights"),
    }
}

/// Writes to stdout, exiting quietly when the reader has gone away.
fn emit(text: &str) -> Result<()> {
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
        Err(e) if e.kind() == ErrorKind::BrokenPipe => std::process::exit(0),
        r => Ok(r?),
    }
}

fn emit_json<T: serde::Serialize>(value: &T) -> Result<()> {
    emit(&(serde_json::to_string_pretty(value)? + "\n"))
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let common = &cli.common;
    match &cli.command {
        Command::Run {
            scenario,
            variant,
            transcript,
            endpoint,
            model,
            temperature,
            explore,
        } => {
            let s = settings(common, transcript.as_ref(), Some((endpoint, model, temperature)))?;
            let mut h = harness(&s)?;
            let id = scenario_id(&mut h, scenario)?;
            let source = match &s.endpoint {
                Some(endpoint) => ModelSource::Live(LiveSource {
                    endpoint: endpoint.clone(),
                    model: s.model.clone().context("live runs need --model")?,
                    temperature: s.temperature.unwrap_or(0.6),
                    transcript: transcript_path(&s)?,
                }),
                None => ModelSource::Canned {
                    transcript: transcript_path(&s)?,
                    model: s.model.clone(),
                },
            };
            let config = RunConfig {
                scenario: id,
                variant: *variant,
                mode: s.mode.unwrap_or_default(),
                seed: s.seed.unwrap_or(0),
                source,
                explore: *explore,
            };
            let record = h.run(&config);
            emit_json(&record)?;
            if let Some(reason) = &record.skipped {
                bail!("run skipped: {reason}");
            }
        }
        Command::Score { scenario, plan, text } => {
            let s = settings(common, None, None)?;
            let mut h = harness(&s)?;
            let id = scenario_id(&mut h, scenario)?;
            let text = match (plan, text) {
                (Some(p), _) => std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?,
                (None, Some(t)) => t.clone(),
                (None, None) => {
                    let mut t = String::new();
                    std::io::stdin().read_to_string(&mut t)?;
                    t
                }
            };
            let report = h.score_text(&id, &text, s.mode.unwrap_or_default(), s.seed.unwrap_or(0))?;
            emit_json(&report)?;
        }
        Command::Batch {
            transcript,
            scenario,
            variant,
            workers,
            records,
            json,
        } => {
            let s = settings(common, transcript.as_ref(), None)?;
            let h = harness(&s)?;
            let path = transcript_path(&s)?;
            let mut keys: Vec<(String, String, PromptVariant)> = Vec::new();
            for r in TranscriptStore::read(&path)? {
                let key = (r.model_name, r.scenario, r.prompt_variant);
                if scenario.as_ref().is_some_and(|sc| *sc != key.1) || variant.is_some_and(|v| v != key.2) {
                    continue;
                }
                if !keys.contains(&key) {
                    keys.push(key);
                }
            }
            let configs: Vec<RunConfig> = keys
                .into_iter()
                .map(|(model, scenario, variant)| RunConfig {
                    scenario,
                    variant,
                    mode: s.mode.unwrap_or_default(),
                    seed: s.seed.unwrap_or(0),
                    source: ModelSource::Canned {
                        transcript: path.clone(),
                        model: Some(model),
                    },
                    explore: false,
                })
                .collect();
            let (recs, agg) = batch(&h, &configs, *workers);
            if let Some(out) = records {
                std::fs::write(out, to_jsonl(&recs)).with_context(|| format!("writing {}", out.display()))?;
            }
            if *json {
                emit_json(&agg)?;
            } else {
                emit(&agg.render())?;
            }
        }
        Command::Explore { scenario, plan, json } => {
            let s = settings(common, None, None)?;
            let mut h = harness(&s)?;
            let id = scenario_id(&mut h, scenario)?;
            let sc = h.registry.get(&id)?.clone();
            let seed = s.seed.unwrap_or(0);
            let mut scene = h.sim.spawn(&sc.scene)?;
            let mut before = None;
            if let Some(p) = plan {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                let mode = s.mode.unwrap_or_default();
                before = Some(h.score_text(&id, &text, mode, seed)?);
                let grounded = resolve_lenient(&parse(&text), &scene, seed);
                scene = operationalize(&h.sim, &grounded, &scene, mode).final_scene;
            }
            let repair = h.repair(&sc, &scene, seed)?;
            if *json {
                let out = serde_json::json!({ "initial": before, "repair": repair });
                emit_json(&out)?;
            } else {
                let mut out = String::new();
                if let Some(b) = &before {
                    let _ = writeln!(
                        out,
                        "given plan: stability {:.3}, iou {:.3}, first failure {}",
                        b.stability,
                        b.iou,
                        b.failure_step.map_or("none".into(), |s| format!("at step {s}"))
                    );
                }
                let _ = writeln!(out, "plan:\n{}\n\ndecisions:", repair.text);
                for d in &repair.decisions {
                    let label = d.label.map_or("-".to_string(), |l| l.to_string());
                    let habitat = d.habitat.as_ref().map_or("-".to_string(), |hd| hd.up.clone());
                    let _ = writeln!(
                        out,
                        "  {:<12} {:<9} {:>6.2} m  {:<6} {:<6} {}{}",
                        d.id,
                        d.shape,
                        d.distance,
                        label,
                        habitat,
                        if d.used { "used" } else { "unused" },
                        d.note.as_deref().map(|n| format!(" ({n})")).unwrap_or_default()
                    );
                }
                let _ = writeln!(out, "\nreport:\n{}", serde_json::to_string_pretty(&repair.report)?);
                emit(&out)?;
            }
        }
        Command::Losses { input, lambda, margin } => {
            let file = TensorFile::load(input).with_context(|| format!("reading {}", input.display()))?;
            let breakdown = evaluate(&file, parse_lambda(lambda)?, *margin)?;
            emit_json(&breakdown)?;
        }
        Command::Replay { transcript } => {
            let s = settings(common, transcript.as_ref(), None)?;
            let h = harness(&s)?;
            let recs = TranscriptStore::read(&transcript_path(&s)?)?;
            emit(&to_jsonl(&h.replay(
                &recs,
                s.mode.unwrap_or_default(),
                s.seed.unwrap_or(0),
            )))?;
        }
    }
    Ok(())
}
