use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::loss::td_loss;
use super::network::QNetwork;
use super::replay::{ReplayBuffer, Transition};
use super::{Adam, DqnError};
use crate::twin::{Action, EnvConfig, LosStatus, TwinEnv};
use crate::xapp::Normalization;

/// Result of one environment step as seen by the learner.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub obs: Vec<f64>,
    pub reward: f64,
    /// The episode ended for a reason inside the MDP.
    pub terminal: bool,
    /// The episode hit its time limit.
    pub truncated: bool,
    /// Whether the step ended blocked; feeds the NLoS-fraction log.
    pub nlos: bool,
}

/// Minimal reset/step interface the trainer drives.
pub trait Environment {
    fn obs_dim(&self) -> usize;
    fn num_actions(&self) -> usize;
    fn reset(&mut self, seed: u64) -> Vec<f64>;
    fn step(&mut self, action: usize) -> Result<Outcome, DqnError>;
}

/// [`TwinEnv`] with normalized observations.
pub struct TwinEnvironment {
    env: TwinEnv,
    norm: Normalization,
}

impl TwinEnvironment {
    pub fn new(cfg: EnvConfig) -> Result<Self, DqnError> {
        let norm = Normalization::from_scenario(&cfg.scenario);
        let env = TwinEnv::new(cfg).map_err(|e| DqnError::InvalidConfig(e.to_string()))?;
        Ok(Self { env, norm })
    }

    pub fn normalization(&self) -> &Normalization {
        &self.norm
    }

    pub fn inner(&self) -> &TwinEnv {
        &self.env
    }
}

impl Environment for TwinEnvironment {
    fn obs_dim(&self) -> usize {
        self.norm.offset.len()
    }

    fn num_actions(&self) -> usize {
        Action::ALL.len()
    }

    fn reset(&mut self, seed: u64) -> Vec<f64> {
        let (_, sv) = self.env.reset(seed);
        self.norm.apply(&sv)
    }

    fn step(&mut self, action: usize) -> Result<Outcome, DqnError> {
        let a = Action::from_index(action)
            .ok_or_else(|| DqnError::DimensionMismatch(format!("action {action} out of range")))?;
        let s = self.env.step(a).map_err(|e| DqnError::Env(e.to_string()))?;
        Ok(Outcome {
            obs: self.norm.apply(&s.state),
            reward: s.reward,
            terminal: false,
            truncated: s.done,
            nlos: s.world.los == LosStatus::Nlos,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub gamma: f64,
    pub lr: f64,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    /// Gradient updates between target-network copies.
    pub target_sync: u64,
    pub eps_start: f64,
    pub eps_end: f64,
    pub eps_decay_steps: u64,
    pub episodes: usize,
    /// Environment steps collected before the first update.
    pub warmup_steps: u64,
    /// Gradient updates per environment step once warm.
    pub updates_per_step: u32,
    pub hidden: Vec<usize>,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            lr: 1e-3,
            batch_size: 64,
            buffer_capacity: 50_000,
            target_sync: 500,
            eps_start: 1.0,
            eps_end: 0.05,
            eps_decay_steps: 20_000,
            episodes: 160,
            warmup_steps: 1_000,
            updates_per_step: 1,
            hidden: vec![64, 64],
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), DqnError> {
        let bad = |m: &str| Err(DqnError::InvalidConfig(m.into()));
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return bad("gamma must be in (0, 1)");
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad("learning rate must be positive");
        }
        let unit = 0.0..=1.0;
        if !unit.contains(&self.eps_start) || !unit.contains(&self.eps_end) {
            return bad("epsilon must lie in [0, 1]");
        }
        if self.batch_size == 0 || self.buffer_capacity == 0 || self.target_sync == 0 {
            return bad("batch size, buffer capacity and target sync must be positive");
        }
        if self.hidden.contains(&0) {
            return bad("hidden widths must be positive");
        }
        Ok(())
    }

    /// Linear decay from `eps_start` to `eps_end` over `eps_decay_steps`.
    pub fn epsilon(&self, step: u64) -> f64 {
        if self.eps_decay_steps == 0 {
            return self.eps_end;
        }
        let f = (step as f64 / self.eps_decay_steps as f64).min(1.0);
        self.eps_start + (self.eps_end - self.eps_start) * f
    }

    fn dims(&self, env: &dyn Environment) -> Vec<usize> {
        let mut d = vec![env.obs_dim()];
        d.extend(&self.hidden);
        d.push(env.num_actions());
        d
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpisodeLog {
    pub episode: usize,
    #[serde(rename = "return")]
    pub ret: f64,
    pub nlos_fraction: f64,
    pub epsilon: f64,
    /// Mean TD loss over this episode's updates; 0 before learning starts.
    pub loss: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub net: QNetwork,
    pub log: Vec<EpisodeLog>,
    pub updates: u64,
    pub env_steps: u64,
}

/// Independent deterministic streams derived from one seed.
fn stream(seed: u64, n: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(n);
    r
}

const INIT: u64 = 0;
const ACT: u64 = 1;
const EPISODE: u64 = 2;

pub fn greedy(q: &[f64]) -> usize {
    let mut best = 0;
    for i in 1..q.len() {
        if q[i] > q[best] {
            best = i;
        }
    }
    best
}

fn explore(rng: &mut ChaCha8Rng, eps: f64, n: usize) -> Option<usize> {
    let u: f64 = rng.gen();
    let a = rng.gen_range(0..n);
    (u < eps).then_some(a)
}

/// ε-greedy DQN with experience replay and a periodically synced target
/// network. Fully determined by `cfg.seed`.
pub fn train(env: &mut dyn Environment, cfg: &TrainConfig) -> Result<TrainOutcome, DqnError> {
    cfg.validate()?;
    let mut init = stream(cfg.seed, INIT);
    let mut act = stream(cfg.seed, ACT);
    let mut episodes = stream(cfg.seed, EPISODE);
    let n_actions = env.num_actions();

    let mut net = QNetwork::new(&cfg.dims(env), &mut init);
    let mut target = net.clone();
    let mut opt = Adam::new(&net, cfg.lr);
    let mut buffer = ReplayBuffer::new(cfg.buffer_capacity, init.gen());
    let mut log = Vec::with_capacity(cfg.episodes);
    let mut step = 0u64;
    let mut updates = 0u64;

    for episode in 0..cfg.episodes {
        let mut obs = env.reset(episodes.gen());
        let (mut ret, mut nlos, mut len) = (0.0, 0usize, 0usize);
        let (mut loss_sum, mut loss_n) = (0.0, 0usize);
        let mut eps;
        loop {
            eps = cfg.epsilon(step);
            let action = match explore(&mut act, eps, n_actions) {
                Some(a) => a,
                None => greedy(&net.forward(&obs)?),
            };
            let out = env.step(action)?;
            step += 1;
            len += 1;
            ret += out.reward;
            nlos += usize::from(out.nlos);
            buffer.push(Transition {
                state: std::mem::take(&mut obs),
                action,
                reward: out.reward,
                next_state: out.obs.clone(),
                done: out.terminal,
            });
            obs = out.obs;

            let warm = step > cfg.warmup_steps && buffer.len() >= cfg.batch_size;
            for _ in 0..if warm { cfg.updates_per_step } else { 0 } {
                let batch = buffer.sample(cfg.batch_size);
                let (loss, grads) = td_loss(&net, &target, &batch, cfg.gamma)?;
                if !loss.is_finite() || !grads.is_finite() {
                    return Err(DqnError::Diverged { step, loss });
                }
                opt.step(&mut net, &grads);
                updates += 1;
                loss_sum += loss;
                loss_n += 1;
                if updates.is_multiple_of(cfg.target_sync) {
                    target = net.clone();
                }
            }
            if out.terminal || out.truncated {
                break;
            }
        }
        if !net.is_finite() {
            return Err(DqnError::Diverged { step, loss: f64::NAN });
        }
        log.push(EpisodeLog {
            episode,
            ret,
            nlos_fraction: nlos as f64 / len as f64,
            epsilon: eps,
            loss: if loss_n > 0 { loss_sum / loss_n as f64 } else { 0.0 },
        });
    }
    Ok(TrainOutcome { net, log, updates, env_steps: step })
}

/// Uniform-random actions with the same seed streams `train` uses, so an
/// ε = 1 run reproduces it episode for episode.
pub fn random_baseline(env: &mut dyn Environment, episodes: usize, seed: u64) -> Result<Vec<EpisodeLog>, DqnError> {
    let mut act = stream(seed, ACT);
    let mut ep_rng = stream(seed, EPISODE);
    let n = env.num_actions();
    let mut log = Vec::with_capacity(episodes);
    for episode in 0..episodes {
        env.reset(ep_rng.gen());
        let (mut ret, mut nlos, mut len) = (0.0, 0usize, 0usize);
        loop {
            let a = explore(&mut act, 1.0, n).expect("always explores");
            let out = env.step(a)?;
            len += 1;
            ret += out.reward;
            nlos += usize::from(out.nlos);
            if out.terminal || out.truncated {
                break;
            }
        }
        log.push(EpisodeLog { episode, ret, nlos_fraction: nlos as f64 / len as f64, epsilon: 1.0, loss: 0.0 });
    }
    Ok(log)
}

/// Greedy rollouts of `net` over `episodes` seeded resets.
pub fn evaluate_greedy(
    env: &mut dyn Environment,
    net: &QNetwork,
    episodes: usize,
    seed: u64,
) -> Result<Vec<EpisodeLog>, DqnError> {
    let mut ep_rng = stream(seed, EPISODE);
    let mut log = Vec::with_capacity(episodes);
    for episode in 0..episodes {
        let mut obs = env.reset(ep_rng.gen());
        let (mut ret, mut nlos, mut len) = (0.0, 0usize, 0usize);
        loop {
            let out = env.step(greedy(&net.forward(&obs)?))?;
            len += 1;
            ret += out.reward;
            nlos += usize::from(out.nlos);
            obs = out.obs;
            if out.terminal || out.truncated {
                break;
            }
        }
        log.push(EpisodeLog { episode, ret, nlos_fraction: nlos as f64 / len as f64, epsilon: 0.0, loss: 0.0 });
    }
    Ok(log)
}

/// Writes the per-episode log as CSV with header
/// `episode,return,nlos_fraction,epsilon,loss`.
pub fn write_log_csv<W: Write>(log: &[EpisodeLog], out: W) -> Result<(), DqnError> {
    let mut w = csv::Writer::from_writer(out);
    for row in log {
        w.serialize(row).map_err(|e| DqnError::Io(e.to_string()))?;
    }
    w.flush().map_err(|e| DqnError::Io(e.to_string()))
}

/// Convenience: training-mode twin environment for a scenario.
pub fn twin_training_env(scenario: &crate::twin::ScenarioConfig) -> Result<TwinEnvironment, DqnError> {
    TwinEnvironment::new(EnvConfig::training(scenario))
}
