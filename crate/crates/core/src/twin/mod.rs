//! Digital twin of the deployment room: ground truth, line of sight, link
//! model, and the reset/step environment used to train the controller.

mod env;
mod link;
mod los;
mod scenario;
mod world;

pub use env::{Action, EnvConfig, EnvError, EnvMode, EnvStep, TwinEnv};
pub use link::{link_quality, path_loss, LinkModel, LinkQuality};
pub use los::{compute_los, los_or_clear, DegenerateSegment, LosStatus, ObstacleBox};
pub use scenario::{
    CameraConfig, ControlConfig, GnbConfig, Keyframe, ObstacleConfig, Room, ScenarioConfig,
    ScenarioError, Trajectory, TrainingConfig, UeConfig,
};
pub use world::{commanded_velocity, step_world, EntityPose, Scene, WorldState};
