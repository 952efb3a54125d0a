//! Failure-triggered exploration.
//!
//! When a plan fails, the agent walks to objects nearest-first, stacks each
//! one on a stand-in for itself (a unit cube), embeds the resulting
//! trajectory and grounds it against flat and round reference behavior. The
//! objects that ground flat in some habitat are then laid out as a
//! staircase to the goal.

mod model;
mod probe;
mod staircase;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::planlang::ExecutionTrace;
use crate::sim::{ObjectId, SimError};

pub use model::{
    ground, pair_loss, train_similarity, BehaviorEmbedding, Grounding, GroundingModel, Neighbor, TrainParams,
    MODEL_FORMAT, MODEL_VERSION,
};
pub use probe::{
    featurize, probe_dataset, probe_dimensions, probe_in, stack_probe, Features, LabeledFeatures, ProbeSource,
    FEATURE_DIM, FEATURE_NAMES, PROBES_PER_HABITAT, PROBE_BASE_ID, PROBE_JITTER, TRAINING_SHAPES,
};
pub use staircase::{
    determine_habitat, explore, synthesize_staircase, Exploration, HabitatDecision, ObjectDecision, Phase, Staircase,
    StaircaseGoal,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Flat,
    Round,
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Flat => "flat",
            Label::Round => "round",
        })
    }
}

#[derive(Debug, Error)]
pub enum ExplorerError {
    #[error("object `{0}` cannot be moved")]
    Immovable(ObjectId),
    #[error("probe for `{id}` is blocked by `{with}`")]
    ProbeBlocked { id: ObjectId, with: String },
    #[error("trace has {0} samples, need at least 2")]
    DegenerateTrace(usize),
    #[error("insufficient training data: {0}")]
    InsufficientData(String),
    #[error("shape `{0}` is neither flat nor round and cannot be used for training")]
    MixedShape(String),
    #[error("no habitat of `{0}` grounds as flat")]
    NoFlatHabitat(ObjectId),
    #[error("no staircase can be built: {0}")]
    Unsolvable(String),
    #[error("model file: {0}")]
    Format(String),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<crate::voxkb::VoxKbError> for ExplorerError {
    fn from(e: crate::voxkb::VoxKbError) -> Self {
        ExplorerError::Sim(SimError::Shape(e))
    }
}

/// Index of the step that stopped a strict execution.
pub fn detect_failure(trace: &ExecutionTrace) -> Option<usize> {
    trace.first_failure().map(|(i, _)| i)
}
