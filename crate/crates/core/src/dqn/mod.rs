//! Discrete-action deep Q-learning: MLP, Adam, replay buffer, training loop
//! and the policy file shared with the xApp.

mod adam;
mod loss;
mod network;
mod policy;
mod replay;
mod train;

use thiserror::Error;

pub use adam::Adam;
pub use loss::{huber, huber_grad, td_loss, td_target};
pub use network::{Dense, ForwardCache, Gradients, QNetwork};
pub use policy::{Policy, POLICY_FORMAT, POLICY_VERSION};
pub use replay::{ReplayBuffer, Transition};
pub use train::{
    evaluate_greedy, greedy, random_baseline, train, twin_training_env, write_log_csv, Environment,
    EpisodeLog, Outcome, TrainConfig, TrainOutcome, TwinEnvironment,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DqnError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("training diverged at step {step} (loss {loss})")]
    Diverged { step: u64, loss: f64 },
    #[error("corrupt policy file: {0}")]
    CorruptPolicy(String),
    #[error("policy schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("environment: {0}")]
    Env(String),
    #[error("io: {0}")]
    Io(String),
}
