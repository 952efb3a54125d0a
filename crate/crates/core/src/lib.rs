//! Situated evaluation of object-stacking plans.
//!
//! Free-text plans are parsed into manipulation actions, grounded against a
//! scene, executed in a deterministic quasi-static world and scored for
//! stability and object selection. Failed plans can be repaired by an
//! exploration agent that probes objects, grounds their behavior to flat or
//! round concepts and builds a staircase. The `distill` module provides the
//! losses for transferring that knowledge back into a language model.

pub mod distill;
pub mod explorer;
pub mod geometry;
pub mod harness;
pub mod metrics;
pub mod planlang;
pub mod sim;
pub mod voxkb;

pub use geometry::{Rotation, Vec3};
pub use metrics::EvalReport;
pub use planlang::{Action, ExecutionTrace, GroundedPlan, Mode, ObjectRef, Plan};
pub use sim::{Agent, ObjectId, Pose, Scene, SceneObject, SimError, Simulator};
pub use voxkb::{active_habitat, Habitat, VoxKb, Voxeme};
