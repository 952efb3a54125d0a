//! Scenario description files.
//!
//! A scenario bundles a scene layout with the prompt text shown to the
//! model, the goal height, the admissible reference object sets and any
//! objects already placed as part of a partial solution. Files are TOML;
//! see `docs/formats.md`.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Rotation, Vec3};

use super::{Agent, ObjectId, Pose, SceneObject};

const BUILTIN: &[(&str, &str)] = &[
    ("f1", include_str!("../../../../scenarios/f1.toml")),
    (
        "f3-no-distractors",
        include_str!("../../../../scenarios/f3-no-distractors.toml"),
    ),
    (
        "f3-all-in-fov",
        include_str!("../../../../scenarios/f3-all-in-fov.toml"),
    ),
    (
        "f3-partial-solution",
        include_str!("../../../../scenarios/f3-partial-solution.toml"),
    ),
    ("f6", include_str!("../../../../scenarios/f6.toml")),
];

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),
    #[error("scenario parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("scenario `{id}`: {reason}")]
    Invalid { id: String, reason: String },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectSpec {
    pub id: ObjectId,
    pub shape: String,
    pub dimensions: Vec3,
    pub position: Vec3,
    /// Roll, pitch, yaw in degrees about X, Y, Z (applied Z * Y * X).
    #[serde(default)]
    pub rotation: [f64; 3],
    #[serde(default)]
    pub color: Option<String>,
    #[serde(default = "yes")]
    pub movable: bool,
}

fn yes() -> bool {
    true
}

impl ObjectSpec {
    pub fn rotation(&self) -> Rotation {
        let [r, p, y] = self.rotation.map(f64::to_radians);
        Rotation::from_euler_angles(r, p, y)
    }

    pub fn to_object(&self) -> SceneObject {
        SceneObject {
            id: self.id.clone(),
            shape: self.shape.clone(),
            dimensions: self.dimensions,
            pose: Pose::new(self.position, self.rotation()),
            movable: self.movable,
            color: self.color.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlatformSpec {
    pub id: ObjectId,
    pub dimensions: Vec3,
    pub position: Vec3,
    #[serde(default)]
    pub color: Option<String>,
}

/// Layout of a scene: agent, interactable objects and static platforms.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SceneSpec {
    #[serde(default)]
    pub agent: Agent,
    #[serde(default, rename = "object")]
    pub objects: Vec<ObjectSpec>,
    #[serde(default, rename = "platform")]
    pub platforms: Vec<PlatformSpec>,
}

impl SceneSpec {
    /// Objects followed by platforms (as immovable `platform` shapes).
    pub fn all_objects(&self) -> Vec<ObjectSpec> {
        let mut all = self.objects.clone();
        all.extend(self.platforms.iter().map(|p| ObjectSpec {
            id: p.id.clone(),
            shape: "platform".into(),
            dimensions: p.dimensions,
            position: p.position,
            rotation: [0.0; 3],
            color: p.color.clone(),
            movable: false,
        }));
        all
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptSpec {
    /// Problem statement shown to the model.
    pub base: String,
    /// Prepended for models that also receive a picture of the scene.
    #[serde(default)]
    pub image_cue: Option<String>,
    /// Description of the steps already completed, for the partial-solution variant.
    #[serde(default)]
    pub partial_steps: Option<String>,
    /// True when the prompt text is a reconstruction rather than a quoted prompt.
    #[serde(default)]
    pub reconstructed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub id: String,
    #[serde(default)]
    pub title: String,
    pub goal_height: f64,
    #[serde(default)]
    pub target_platform: Option<ObjectId>,
    /// Admissible correct object sets, as shape multisets.
    pub references: Vec<Vec<String>>,
    /// Objects already standing as part of a supplied partial solution.
    #[serde(default)]
    pub preplaced: Vec<ObjectId>,
    pub prompt: PromptSpec,
    #[serde(flatten)]
    pub scene: SceneSpec,
}

impl Scenario {
    pub fn from_toml_str(text: &str) -> Result<Self, ScenarioError> {
        let s: Scenario = toml::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    fn validate(&self) -> Result<(), ScenarioError> {
        let invalid = |reason: String| ScenarioError::Invalid {
            id: self.id.clone(),
            reason,
        };
        if self.references.is_empty() {
            return Err(invalid("no reference sets".into()));
        }
        let all = self.scene.all_objects();
        for p in &self.preplaced {
            if !all.iter().any(|o| &o.id == p) {
                return Err(invalid(format!("preplaced object `{p}` not in scene")));
            }
        }
        if let Some(t) = &self.target_platform {
            if !self.scene.platforms.iter().any(|p| &p.id == t) {
                return Err(invalid(format!("target platform `{t}` not in scene")));
            }
        }
        Ok(())
    }
}

/// Scenarios by id. Starts with the shipped set; files can be added.
#[derive(Debug, Clone)]
pub struct ScenarioRegistry {
    scenarios: BTreeMap<String, Scenario>,
}

impl ScenarioRegistry {
    pub fn builtin() -> Self {
        let scenarios = BUILTIN
            .iter()
            .map(|(id, text)| {
                let s = Scenario::from_toml_str(text).expect("shipped scenario is valid");
                debug_assert_eq!(&s.id, id);
                (s.id.clone(), s)
            })
            .collect();
        ScenarioRegistry { scenarios }
    }

    pub fn insert(&mut self, scenario: Scenario) {
        self.scenarios.insert(scenario.id.clone(), scenario);
    }

    pub fn get(&self, id: &str) -> Result<&Scenario, ScenarioError> {
        self.scenarios
            .get(id)
            .ok_or_else(|| ScenarioError::UnknownScenario(id.to_string()))
    }

    /// Looks `key` up as a registered id, falling back to a file path.
    pub fn resolve(&self, key: &str) -> Result<Scenario, ScenarioError> {
        if let Ok(s) = self.get(key) {
            return Ok(s.clone());
        }
        let path = Path::new(key);
        if path.exists() {
            return Scenario::load(path);
        }
        Err(ScenarioError::UnknownScenario(key.to_string()))
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.scenarios.keys().map(String::as_str)
    }
}
