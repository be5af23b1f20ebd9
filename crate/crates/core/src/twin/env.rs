//! Reset/step reinforcement-learning environment over the twin.
//!
//! One step is one control interval. Actions change the gNB's rail velocity
//! by ±δ; the reward is the negative path loss scaled by `1/reward_scale`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::link::path_loss;
use super::los::ObstacleBox;
use super::scenario::{Keyframe, ScenarioConfig, ScenarioError, Trajectory, TrainingConfig};
use super::world::{step_world, Scene, WorldState};
use crate::geom::Vec2;
use crate::xapp::StateVector;

/// The three discrete controls.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Action {
    Maintain,
    Increase,
    Decrease,
}

impl Action {
    pub const ALL: [Action; 3] = [Action::Maintain, Action::Increase, Action::Decrease];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Action> {
        Self::ALL.get(i).copied()
    }

    /// Velocity change in units of δ.
    pub fn direction(self) -> f64 {
        match self {
            Action::Maintain => 0.0,
            Action::Increase => 1.0,
            Action::Decrease => -1.0,
        }
    }
}

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("invalid environment config: {0}")]
    InvalidConfig(String),
    #[error("step() called before reset()")]
    NotReset,
}

impl From<ScenarioError> for EnvError {
    fn from(e: ScenarioError) -> Self {
        EnvError::InvalidConfig(e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EnvMode {
    /// Random UE walk and jittered obstacle each episode.
    Training,
    /// The scenario's scripted schedule, gNB at its start position.
    Evaluation,
}

#[derive(Debug, Clone)]
pub struct EnvConfig {
    pub scenario: ScenarioConfig,
    pub mode: EnvMode,
    pub episode_len: usize,
    pub reward_scale: f64,
}

impl EnvConfig {
    pub fn training(scenario: &ScenarioConfig) -> Self {
        Self {
            episode_len: scenario.training.episode_len,
            scenario: scenario.clone(),
            mode: EnvMode::Training,
            reward_scale: 100.0,
        }
    }

    /// Covers the whole scripted scenario in control steps.
    pub fn evaluation(scenario: &ScenarioConfig) -> Self {
        let steps = (scenario.duration_s / scenario.control.t_ctrl_s).round() as usize;
        Self {
            episode_len: steps.max(1),
            scenario: scenario.clone(),
            mode: EnvMode::Evaluation,
            reward_scale: 100.0,
        }
    }

    pub fn validate(&self) -> Result<(), EnvError> {
        self.scenario.validate()?;
        if self.episode_len == 0 {
            return Err(EnvError::InvalidConfig("episode_len must be positive".into()));
        }
        if !(self.reward_scale > 0.0) {
            return Err(EnvError::InvalidConfig("reward_scale must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvStep {
    pub state: StateVector,
    pub reward: f64,
    pub done: bool,
    pub world: WorldState,
}

pub struct TwinEnv {
    cfg: EnvConfig,
    base: Scene,
    scene: Scene,
    world: Option<WorldState>,
    steps: usize,
}

impl TwinEnv {
    pub fn new(cfg: EnvConfig) -> Result<Self, EnvError> {
        cfg.validate()?;
        let base = Scene::from_config(&cfg.scenario);
        Ok(Self { scene: base.clone(), base, cfg, world: None, steps: 0 })
    }

    pub fn config(&self) -> &EnvConfig {
        &self.cfg
    }

    pub fn scene(&self) -> &Scene {
        &self.scene
    }

    pub fn world(&self) -> Option<&WorldState> {
        self.world.as_ref()
    }

    pub fn reset(&mut self, seed: u64) -> (WorldState, StateVector) {
        self.scene = match self.cfg.mode {
            EnvMode::Evaluation => self.base.clone(),
            EnvMode::Training => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                randomized_scene(&self.base, &self.cfg.scenario.training, self.horizon_s(), &mut rng)
            }
        };
        let world = self.scene.initial_state();
        let sv = StateVector::from_truth(&world);
        self.world = Some(world.clone());
        self.steps = 0;
        (world, sv)
    }

    pub fn step(&mut self, action: Action) -> Result<EnvStep, EnvError> {
        let world = self.world.as_ref().ok_or(EnvError::NotReset)?;
        let ctl = self.scene.control;
        let v = (world.gnb.velocity.x + action.direction() * ctl.delta).clamp(-ctl.v_max, ctl.v_max);
        let mut commanded = world.clone();
        commanded.gnb.velocity.x = v;
        let target = world.gnb.position.x + v * ctl.t_ctrl_s;
        let next = step_world(&self.scene, &commanded, target, ctl.t_ctrl_s);
        self.steps += 1;
        let pl = path_loss(next.distance(), next.los, &self.scene.link);
        let step = EnvStep {
            state: StateVector::from_truth(&next),
            reward: -pl / self.cfg.reward_scale,
            done: self.steps >= self.cfg.episode_len,
            world: next.clone(),
        };
        self.world = Some(next);
        Ok(step)
    }

    fn horizon_s(&self) -> f64 {
        self.cfg.episode_len as f64 * self.cfg.scenario.control.t_ctrl_s
    }
}

/// Draws a fresh UE walk, obstacle placement and gNB start.
fn randomized_scene(base: &Scene, tc: &TrainingConfig, horizon_s: f64, rng: &mut ChaCha8Rng) -> Scene {
    let mut scene = base.clone();
    let room = &base.room;
    let margin = 0.3;

    let j = tc.obstacle_jitter_m;
    let mut obs = base.obstacle;
    if j > 0.0 {
        obs.center.x += rng.gen_range(-j..=j);
        obs.center.y += rng.gen_range(-j..=j);
    }
    scene.obstacle = obs;

    let [x0, x1] = base.control.x_bounds;
    scene.gnb_start.x = rng.gen_range(x0..=x1);

    let [[rx0, rx1], [ry0, ry1]] = tc.ue_region.unwrap_or([
        [room.x[0] + margin, room.x[1] - margin],
        [(room.y[0] + room.y[1]) / 2.0, room.y[1] - margin],
    ]);
    let region = Region { x: [rx0, rx1], y: [ry0, ry1], obstacle: obs };
    let mut keys = Vec::new();
    let mut at = region.waypoint(rng);
    keys.push(Keyframe { t_s: 0.0, x: at.x, y: at.y });
    let mut t = 0.0;
    while t < horizon_s {
        t += rng.gen_range(tc.dwell_s[0]..=tc.dwell_s[1]);
        keys.push(Keyframe { t_s: t, x: at.x, y: at.y });
        let next = region.waypoint(rng);
        let speed = rng.gen_range(tc.walk_speed[0]..=tc.walk_speed[1]);
        t += (next - at).norm() / speed;
        keys.push(Keyframe { t_s: t, x: next.x, y: next.y });
        at = next;
    }
    scene.ue_path = Trajectory::new(keys);
    scene
}

struct Region {
    x: [f64; 2],
    y: [f64; 2],
    obstacle: ObstacleBox,
}

impl Region {
    /// Uniform point in the region, kept clear of the obstacle footprint.
    fn waypoint(&self, rng: &mut ChaCha8Rng) -> Vec2 {
        let clearance = 0.4;
        let o = &self.obstacle;
        loop {
            let p = Vec2::new(rng.gen_range(self.x[0]..=self.x[1]), rng.gen_range(self.y[0]..=self.y[1]));
            let inside = (p.x - o.center.x).abs() <= o.half_extents.x + clearance
                && (p.y - o.center.y).abs() <= o.half_extents.y + clearance;
            if !inside {
                return p;
            }
        }
    }
}
