//! Desk-scale grasp world: objects, a quasi-static grip/lift model, a
//! synthetic fingertip image renderer, a synthetic EMG source and a model of
//! the operator. Everything random draws from seeded, named streams so a
//! `(seed, config)` pair fixes the whole trajectory.

mod emg_synth;
mod object;
mod operator;
mod render;
pub mod rng;
mod world;

pub use emg_synth::{synth_emg, EmgSynthConfig};
pub use object::{default_objects, load_object_library, ObjectSpec};
pub use operator::{closed_loop_update, Operator, OperatorMode, OperatorModel};
pub use render::{baseline_pixel, render_tactile, RenderConfig, Renderer};
pub use world::{pose_to_force, step_world, ForceTable, GraspState, WorldConfig, WorldEvent};

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("invalid object '{name}': {reason}")]
    InvalidObject { name: String, reason: String },
    #[error("unknown object '{0}'")]
    UnknownObject(String),
    #[error("invalid force table: {0}")]
    InvalidForceTable(String),
    #[error("invalid simulation parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
