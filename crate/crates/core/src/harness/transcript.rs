use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use super::{HarnessError, PromptVariant};

/// One model response. Stored one JSON object per line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptRecord {
    pub model_name: String,
    pub prompt_variant: PromptVariant,
    pub scenario: String,
    pub prompt_text: String,
    pub response_text: String,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
    /// Where the response came from: `live`, `quoted` or `synthetic`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
}

pub fn now_timestamp() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// Append-only JSONL file. Appends from concurrent runs are serialized and
/// synced before returning.
#[derive(Debug)]
pub struct TranscriptStore {
    path: PathBuf,
    lock: Mutex<()>,
}

impl TranscriptStore {
    pub fn new(path: impl Into<PathBuf>) -> Self {
        TranscriptStore {
            path: path.into(),
            lock: Mutex::new(()),
        }
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn append(&self, record: &TranscriptRecord) -> Result<(), HarnessError> {
        let mut line = serde_json::to_string(record).map_err(|e| HarnessError::Transcript {
            line: 0,
            detail: e.to_string(),
        })?;
        line.push('\n');
        let _guard = self.lock.lock().unwrap_or_else(|p| p.into_inner());
        let mut f = OpenOptions::new().create(true).append(true).open(&self.path)?;
        f.write_all(line.as_bytes())?;
        f.sync_data()?;
        Ok(())
    }

    pub fn load(&self) -> Result<Vec<TranscriptRecord>, HarnessError> {
        Self::read(&self.path)
    }

    pub fn read(path: &Path) -> Result<Vec<TranscriptRecord>, HarnessError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn parse(text: &str) -> Result<Vec<TranscriptRecord>, HarnessError> {
        text.lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| {
                serde_json::from_str(l).map_err(|e| HarnessError::Transcript {
                    line: i + 1,
                    detail: e.to_string(),
                })
            })
            .collect()
    }
}
