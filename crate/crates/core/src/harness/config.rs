use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::planlang::Mode;

use super::HarnessError;

/// Optional run settings from one source. Layer with [`Settings::or`]:
/// command-line values over environment over config file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    pub endpoint: Option<String>,
    pub model: Option<String>,
    pub temperature: Option<f64>,
    pub mode: Option<Mode>,
    pub seed: Option<u64>,
    pub tolerance: Option<f64>,
    pub voxkb: Option<PathBuf>,
    pub transcript: Option<PathBuf>,
}

impl Settings {
    /// Keeps every value already set and fills the rest from `lower`.
    pub fn or(self, lower: Settings) -> Settings {
        Settings {
            endpoint: self.endpoint.or(lower.endpoint),
            model: self.model.or(lower.model),
            temperature: self.temperature.or(lower.temperature),
            mode: self.mode.or(lower.mode),
            seed: self.seed.or(lower.seed),
            tolerance: self.tolerance.or(lower.tolerance),
            voxkb: self.voxkb.or(lower.voxkb),
            transcript: self.transcript.or(lower.transcript),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self, HarnessError> {
        toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    /// `STACKEVAL_ENDPOINT`, `STACKEVAL_MODEL`, `STACKEVAL_TEMPERATURE`,
    /// `STACKEVAL_MODE`, `STACKEVAL_SEED`, `STACKEVAL_TOLERANCE`,
    /// `STACKEVAL_VOXKB` and `STACKEVAL_TRANSCRIPT`, read through `var`.
    pub fn from_vars(var: impl Fn(&str) -> Option<String>) -> Result<Self, HarnessError> {
        fn parsed<T: std::str::FromStr>(name: &str, v: Option<String>) -> Result<Option<T>, HarnessError>
        where
            T::Err: std::fmt::Display,
        {
            v.map(|s| {
                s.parse()
                    .map_err(|e| HarnessError::Config(format!("{name}=`{s}`: {e}")))
            })
            .transpose()
        }
        let get = |k: &str| var(k).filter(|s| !s.is_empty());
        Ok(Settings {
            endpoint: get("STACKEVAL_ENDPOINT"),
            model: get("STACKEVAL_MODEL"),
            temperature: parsed("STACKEVAL_TEMPERATURE", get("STACKEVAL_TEMPERATURE"))?,
            mode: parsed("STACKEVAL_MODE", get("STACKEVAL_MODE"))?,
            seed: parsed("STACKEVAL_SEED", get("STACKEVAL_SEED"))?,
            tolerance: parsed("STACKEVAL_TOLERANCE", get("STACKEVAL_TOLERANCE"))?,
            voxkb: get("STACKEVAL_VOXKB").map(PathBuf::from),
            transcript: get("STACKEVAL_TRANSCRIPT").map(PathBuf::from),
        })
    }

    pub fn from_env() -> Result<Self, HarnessError> {
        Self::from_vars(|k| std::env::var(k).ok())
    }
}
