//! Vision-aided controller xApp: localization from camera indications,
//! line-of-sight inference, and DQN-driven rail control.

mod app;
mod control;
mod estimate;
mod state;

use thiserror::Error;

use crate::sm::SmError;

pub use app::{build_state, DecisionRecord, SourceBinding, VisionApp};
pub use control::{decide_and_control, greedy_action, ControllerConfig, Decision, QPolicy};
pub use estimate::{
    estimate_position, estimate_velocity, fuse, infer_los, Fused, ObstacleShape, TrackedEntity,
};
pub use state::{Normalization, NormalizationError, StateVector, FEATURE_ORDER, STATE_DIM};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum XappError {
    #[error("no estimate has ever been received for this entity")]
    NoEstimateEver,
    #[error("no policy loaded")]
    PolicyNotLoaded,
    #[error("camera {0} has no recent pose report")]
    StaleCameraPose(i16),
    #[error("indication from unbound agent {0}")]
    UnknownSource(String),
    #[error("missing track: {0}")]
    MissingTrack(&'static str),
    #[error(transparent)]
    Decode(#[from] SmError),
    #[error("bus: {0}")]
    Bus(String),
}
