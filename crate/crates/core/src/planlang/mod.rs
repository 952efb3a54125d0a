//! Plans written in free text: parsing, grounding and execution.
//!
//! [`parse`] turns a response into a [`Plan`] of manipulation actions,
//! [`resolve`] binds every object reference to a scene object and
//! [`operationalize`] runs the grounded plan against the simulator.

mod execute;
mod lexicon;
mod parse;
mod render;
mod resolve;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use execute::{operationalize, ExecutionTrace, FailureReason, Mode, StepOutcome, StepRecord};
pub use parse::parse;
pub use render::{render, render_action, render_ref};
pub use resolve::{resolve, resolve_lenient, GroundedAction, GroundedPlan, GroundedRegion};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlanError {
    #[error("no scene object matches `{0}`")]
    UnknownObject(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Size {
    Large,
    Small,
}

/// Position relative to the agent, which faces +X.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Descriptor {
    /// Smallest Z.
    Left,
    /// Largest Z.
    Right,
    /// Nearest the agent.
    Front,
    /// Farthest from the agent.
    Back,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Ordinal {
    /// "the", "a": best match.
    Any,
    /// "the other", "another": best match not already used by the plan.
    Other,
    /// "the first", "the second", ...: zero-based rank among matches.
    Nth(u8),
}

/// A noun phrase naming a scene object.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ObjectRef {
    /// Canonical shape name, `it`, or the raw noun when it is not a known shape.
    pub noun: String,
    pub color: Option<String>,
    pub size: Option<Size>,
    pub position: Option<Descriptor>,
    pub ordinal: Ordinal,
    /// "the stack of cubes": a vertical run of objects of this shape.
    pub stack: bool,
}

impl ObjectRef {
    pub fn new(noun: &str) -> Self {
        ObjectRef {
            noun: noun.to_string(),
            color: None,
            size: None,
            position: None,
            ordinal: Ordinal::Any,
            stack: false,
        }
    }

    pub fn it() -> Self {
        ObjectRef::new("it")
    }

    pub fn nth(mut self, ordinal: Ordinal) -> Self {
        self.ordinal = ordinal;
        self
    }

    pub fn is_pronoun(&self) -> bool {
        self.noun == "it"
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Orientation {
    /// Flat side down; the local vertical axis points up.
    Upright,
    OnSide,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Region {
    Ground,
    Beside(ObjectRef),
    InFrontOf(ObjectRef),
    Behind(ObjectRef),
}

impl Region {
    pub fn anchor(&self) -> Option<&ObjectRef> {
        match self {
            Region::Ground => None,
            Region::Beside(r) | Region::InFrontOf(r) | Region::Behind(r) => Some(r),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Action {
    PlaceOn {
        object: ObjectRef,
        base: ObjectRef,
        orientation: Option<Orientation>,
    },
    PlaceAt {
        object: ObjectRef,
        region: Region,
        orientation: Option<Orientation>,
    },
    Rotate {
        object: ObjectRef,
        orientation: Orientation,
    },
    Climb {
        target: ObjectRef,
    },
    /// Text that describes no manipulation, kept verbatim.
    Ignore {
        text: String,
    },
}

impl Action {
    /// Object references the action mentions, moved object first.
    pub fn refs(&self) -> Vec<&ObjectRef> {
        match self {
            Action::PlaceOn { object, base, .. } => vec![object, base],
            Action::PlaceAt { object, region, .. } => {
                let mut v = vec![object];
                v.extend(region.anchor());
                v
            }
            Action::Rotate { object, .. } => vec![object],
            Action::Climb { target } => vec![target],
            Action::Ignore { .. } => Vec::new(),
        }
    }

    pub fn is_ignore(&self) -> bool {
        matches!(self, Action::Ignore { .. })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Plan {
    pub steps: Vec<Action>,
}

impl Plan {
    /// References mentioned by non-ignored steps, in order, pronouns excluded.
    pub fn selected_refs(&self) -> Vec<&ObjectRef> {
        self.steps
            .iter()
            .flat_map(Action::refs)
            .filter(|r| !r.is_pronoun())
            .collect()
    }

    pub fn actionable(&self) -> usize {
        self.steps.iter().filter(|a| !a.is_ignore()).count()
    }
}
