//! Running language-model responses through the evaluation pipeline.
//!
//! A run builds a prompt from a scenario, obtains a response from a live
//! chat-completions endpoint or a recorded transcript, scores it in the
//! simulator and, if asked, hands a failed plan to the explorer for repair.
//! Batches aggregate many runs into a per-model, per-variant score grid.

mod batch;
mod client;
mod config;
mod prompt;
mod run;
mod transcript;

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::explorer::ExplorerError;
use crate::planlang::{Mode, PlanError};
use crate::sim::{ScenarioError, SimError};

pub use batch::{batch, Aggregate, Cell, SkipCount};
pub use client::{network_calls, query_llm, ChatClient, API_KEY_VAR};
pub use config::Settings;
pub use prompt::{build_multimodal_prompt, build_prompt, IMAGE_CUE, ONE_SENTENCE, PARTIAL_QUESTION};
pub use run::{score, to_jsonl, Harness, Repair, RunRecord};
pub use transcript::{now_timestamp, TranscriptRecord, TranscriptStore};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),
    #[error("scenario `{0}` has no partial solution")]
    NoPartialSolution(String),
    #[error(transparent)]
    Scenario(ScenarioError),
    #[error("authentication: {0}")]
    Auth(String),
    #[error("network: {0}")]
    Network(String),
    #[error("malformed response: {0}")]
    MalformedResponse(String),
    #[error("transcript line {line}: {detail}")]
    Transcript { line: usize, detail: String },
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Explorer(#[from] ExplorerError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<ScenarioError> for HarnessError {
    fn from(e: ScenarioError) -> Self {
        match e {
            ScenarioError::UnknownScenario(id) => HarnessError::UnknownScenario(id),
            other => HarnessError::Scenario(other),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PromptVariant {
    FreeText,
    OneSentence,
    PartialSolution,
}

impl PromptVariant {
    pub const ALL: [PromptVariant; 3] = [
        PromptVariant::FreeText,
        PromptVariant::OneSentence,
        PromptVariant::PartialSolution,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PromptVariant::FreeText => "free-text",
            PromptVariant::OneSentence => "one-sentence",
            PromptVariant::PartialSolution => "partial-solution",
        }
    }
}

impl fmt::Display for PromptVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PromptVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PromptVariant::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| format!("unknown prompt variant `{s}` (free-text, one-sentence, partial-solution)"))
    }
}

/// Connection details for a chat-completions endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiveSource {
    /// Base URL; requests go to `<endpoint>/chat/completions`.
    pub endpoint: String,
    pub model: String,
    pub temperature: f64,
    /// Every response is appended here before it is scored.
    pub transcript: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelSource {
    Live(LiveSource),
    /// Recorded responses. The first record matching the run's scenario,
    /// variant and (when given) model is used.
    Canned {
        transcript: PathBuf,
        model: Option<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub scenario: String,
    pub variant: PromptVariant,
    pub mode: Mode,
    pub seed: u64,
    pub source: ModelSource,
    /// Repair strict-mode failures with the explorer.
    #[serde(default)]
    pub explore: bool,
}
