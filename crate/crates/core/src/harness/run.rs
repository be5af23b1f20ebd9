use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::localization::{fuse_frame, LocalizationAccumulator, LocalizationStats};
use super::HarnessError;
use crate::dqn::Policy;
use crate::perception::{observe, report_pose, CameraModel, NoiseModel};
use crate::sm::{
    AgentId, BusEnvelope, E2Bus, MessageKind, ObjectClass, PosControl, PosIndication, ServiceModelMessage,
    SubscriberId, VisIndication,
};
use crate::twin::{link_quality, path_loss, LosStatus, Scene, ScenarioConfig, WorldState};
use crate::units::{cm_to_meters, meters_to_cm, tick_to_micros};
use crate::xapp::{ControllerConfig, DecisionRecord, QPolicy, SourceBinding, VisionApp};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Static,
    Controlled,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Static => "static",
            Mode::Controlled => "controlled",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseProfile {
    Zero,
    Calibrated,
}

impl NoiseProfile {
    pub fn model(self, seed: u64) -> NoiseModel {
        match self {
            NoiseProfile::Zero => NoiseModel::zero(seed),
            NoiseProfile::Calibrated => NoiseModel::calibrated(seed),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub mode: Mode,
    pub seed: u64,
    pub noise: NoiseProfile,
}

/// Ground truth and link metrics for one video frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TickRecord {
    pub tick: u64,
    pub t_s: f64,
    pub gnb_x: f64,
    pub ue_x: f64,
    pub ue_y: f64,
    #[serde(rename = "L_status")]
    pub l_status: u8,
    pub pl_db: f64,
    pub snr_db: f64,
    pub thr_bps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub scenario: String,
    pub mode: Mode,
    pub seed: u64,
    pub noise: NoiseProfile,
    pub fps: u32,
    pub duration_s: f64,
    pub nlos_s: f64,
    pub los_s: f64,
    pub mean_pl_db: f64,
    pub mean_snr_db: f64,
    pub mean_thr_bps: f64,
    /// Times at which the ground-truth LoS state flips.
    pub transitions_s: Vec<f64>,
    /// First frame at or after the xApp start time (controlled mode).
    pub xapp_start_tick: Option<u64>,
    /// First frame whose gNB position differs from the start position.
    pub first_move_tick: Option<u64>,
    /// Per-frame fused obstacle estimates against ground truth.
    pub localization: LocalizationStats,
    #[serde(skip)]
    pub ticks: Vec<TickRecord>,
    #[serde(skip)]
    pub decisions: Vec<DecisionRecord>,
    #[serde(skip)]
    pub controls: Vec<(u64, PosControl)>,
}

impl RunReport {
    pub(crate) fn summarize(&mut self, frame_period: f64) {
        let n = self.ticks.len().max(1) as f64;
        let nlos = self.ticks.iter().filter(|t| t.l_status == 1).count();
        self.nlos_s = nlos as f64 * frame_period;
        self.los_s = (self.ticks.len() - nlos) as f64 * frame_period;
        self.mean_pl_db = self.ticks.iter().map(|t| t.pl_db).sum::<f64>() / n;
        self.mean_snr_db = self.ticks.iter().map(|t| t.snr_db).sum::<f64>() / n;
        self.mean_thr_bps = self.ticks.iter().map(|t| t.thr_bps).sum::<f64>() / n;
        self.transitions_s = self
            .ticks
            .windows(2)
            .filter(|w| w[0].l_status != w[1].l_status)
            .map(|w| w[1].t_s)
            .collect();
        let x0 = self.ticks.first().map(|t| t.gnb_x);
        self.first_move_tick = self.ticks.iter().find(|t| Some(t.gnb_x) != x0).map(|t| t.tick);
    }
}

/// Whether frame `tick` opens a new control interval.
pub fn is_control_epoch(tick: u64, fps: u32, t_ctrl_s: f64) -> bool {
    let period = (t_ctrl_s * 1e6).round() as i64;
    tick == 0 || tick_to_micros(tick, fps) / period != tick_to_micros(tick - 1, fps) / period
}

/// First frame whose timestamp is at or after `t_s`.
pub fn first_tick_at(t_s: f64, fps: u32) -> u64 {
    let target = (t_s * 1e6).round() as i64;
    let mut k = (t_s * f64::from(fps)).floor().max(0.0) as u64;
    while tick_to_micros(k, fps) < target {
        k += 1;
    }
    while k > 0 && tick_to_micros(k - 1, fps) >= target {
        k -= 1;
    }
    k
}

pub(crate) fn record(world: &WorldState, scene: &Scene, fps: u32) -> TickRecord {
    let pl = path_loss(world.distance(), world.los, &scene.link);
    let q = link_quality(pl, &scene.link);
    TickRecord {
        tick: world.tick,
        t_s: tick_to_micros(world.tick, fps) as f64 / 1e6,
        gnb_x: world.gnb.position.x,
        ue_x: world.ue.position.x,
        ue_y: world.ue.position.y,
        l_status: world.los.as_u8(),
        pl_db: pl,
        snr_db: q.snr_db,
        thr_bps: q.throughput_bps,
    }
}

/// The rail platform's E2 agent: applies the newest POS control.
pub(crate) struct GnbAgent {
    sub: Option<SubscriberId>,
    pub target_x: f64,
}

impl GnbAgent {
    pub(crate) fn new(bus: &E2Bus, listen: bool, start_x: f64) -> Self {
        let sub = listen.then(|| bus.subscribe(&[MessageKind::PosCtrl]));
        Self { sub, target_x: start_x }
    }

    /// Drains controls up to `now` and sets the platform velocity and target.
    pub(crate) fn apply(&mut self, bus: &E2Bus, now: u64, world: &mut WorldState, scene: &Scene) -> Vec<PosControl> {
        let Some(sub) = self.sub else {
            return Vec::new();
        };
        let mut applied = Vec::new();
        for env in bus.poll(sub, now).unwrap_or_default() {
            // A control that fails to decode is dropped; the platform holds.
            if let Ok(ctrl) = PosControl::decode(&env.payload) {
                apply_control(&ctrl, world, scene);
                self.target_x = cm_to_meters(ctrl.x);
                applied.push(ctrl);
            }
        }
        applied
    }
}

/// Velocity needed to cover the commanded step in one control interval.
pub(crate) fn apply_control(ctrl: &PosControl, world: &mut WorldState, scene: &Scene) {
    let c = &scene.control;
    let step_m = cm_to_meters(ctrl.x - meters_to_cm(world.gnb.position.x));
    world.gnb.velocity.x = (step_m / c.t_ctrl_s).clamp(-c.v_max, c.v_max);
}

struct Sources {
    fixed: Vec<(AgentId, CameraModel, ChaCha8Rng)>,
    gnb_rng: ChaCha8Rng,
}

impl Sources {
    fn new(cfg: &ScenarioConfig, seed: u64) -> Self {
        let stream = |n: u64| {
            let mut r = ChaCha8Rng::seed_from_u64(seed);
            r.set_stream(n);
            r
        };
        let fixed = cfg
            .cameras
            .iter()
            .enumerate()
            .map(|(i, c)| (AgentId::new(&c.agent), CameraModel::fixed(c, cfg.frame_period()), stream(i as u64 + 1)))
            .collect();
        Self { fixed, gnb_rng: stream(0) }
    }
}

/// One frame of indications, in publication order.
pub(crate) struct FrameReports {
    pub messages: Vec<(AgentId, PosIndication, VisIndication)>,
}

fn perceive(
    cfg: &ScenarioConfig,
    world: &WorldState,
    sources: &mut Sources,
    noise: &NoiseModel,
    tstamp: i64,
) -> FrameReports {
    let mut messages = Vec::new();
    for (agent, cam, rng) in &mut sources.fixed {
        let vis = observe(cam, world, noise, rng, Some(&world.obstacle), tstamp);
        messages.push((agent.clone(), report_pose(&[cam.pose], tstamp), vis));
    }
    let cam = CameraModel::mounted(&cfg.gnb.camera, &world.gnb, cfg.frame_period());
    let vis = observe(&cam, world, noise, &mut sources.gnb_rng, Some(&world.obstacle), tstamp);
    messages.push((AgentId::new(&cfg.gnb.agent), report_pose(&[world.gnb, cam.pose], tstamp), vis));
    FrameReports { messages }
}

fn publish(bus: &E2Bus, frame: &FrameReports, tick: u64) -> Result<(), HarnessError> {
    for (agent, pos, vis) in &frame.messages {
        for (kind, payload) in [(MessageKind::PosInd, pos.encode()), (MessageKind::VisInd, vis.encode())] {
            bus.publish(BusEnvelope { sender: agent.clone(), kind, payload, delivery_tick: tick })
                .map_err(|e| HarnessError::Bus(e.to_string()))?;
        }
    }
    Ok(())
}

pub fn bindings(cfg: &ScenarioConfig) -> Vec<SourceBinding> {
    let mut b: Vec<SourceBinding> =
        cfg.cameras.iter().map(|c| SourceBinding { agent: AgentId::new(&c.agent), camera_id: c.id }).collect();
    b.push(SourceBinding { agent: AgentId::new(&cfg.gnb.agent), camera_id: cfg.gnb.camera.id });
    b
}

/// Full bus-mediated closed loop over the scenario.
///
/// Each frame: the gNB camera and fixed cameras publish POS and VIS, the
/// xApp (controlled mode, after its start time) runs on control epochs, the
/// gNB agent applies any control, metrics are logged, and the world steps.
pub fn run_scenario(cfg: &ScenarioConfig, opts: &RunOptions, policy: Option<&Policy>) -> Result<RunReport, HarnessError> {
    cfg.validate().map_err(|e| HarnessError::Scenario(e.to_string()))?;
    let ctl_cfg = ControllerConfig::from_scenario(cfg);
    let policy = match (opts.mode, policy) {
        (Mode::Controlled, None) => return Err(HarnessError::PolicyRequired),
        (Mode::Controlled, Some(p)) => {
            p.check_controller(&ctl_cfg).map_err(|e| HarnessError::Policy(e.to_string()))?;
            Some(p)
        }
        (Mode::Static, _) => None,
    };
    run_with(cfg, opts, policy)
}

/// [`run_scenario`] with any [`QPolicy`].
pub fn run_with<P: QPolicy + Clone>(
    cfg: &ScenarioConfig,
    opts: &RunOptions,
    policy: Option<&P>,
) -> Result<RunReport, HarnessError> {
    let scene = Scene::from_config(cfg);
    let ctl_cfg = ControllerConfig::from_scenario(cfg);
    let fps = cfg.fps;
    let dt = cfg.frame_period();
    let noise = opts.noise.model(opts.seed);
    let controlled = opts.mode == Mode::Controlled;
    let start_tick = controlled.then(|| first_tick_at(cfg.xapp_start_s, fps));

    let bus = E2Bus::new();
    let mut gnb = GnbAgent::new(&bus, controlled, scene.gnb_start.x);
    let mut sources = Sources::new(cfg, opts.seed);
    let mut app: Option<VisionApp<P>> = None;
    let mut world = scene.initial_state();
    let mut ticks = Vec::new();
    let mut controls = Vec::new();
    let mut loc = LocalizationAccumulator::new(world.obstacle.center);

    for k in 0..cfg.frame_count() {
        bus.advance_to(k);
        if app.is_none() && start_tick.is_some_and(|s| k >= s) {
            app = Some(VisionApp::new(
                ctl_cfg.clone(),
                policy.cloned(),
                &bus,
                AgentId::new(&cfg.gnb.agent),
                cfg.gnb.id,
                bindings(cfg),
            ));
        }
        let tstamp = tick_to_micros(k, fps);
        let frame = perceive(cfg, &world, &mut sources, &noise, tstamp);
        loc.count_frame();
        if let Some(p) = fuse_frame(cfg, &frame, ObjectClass::Obstacle) {
            loc.push(p.xy(), world.obstacle.center);
        }
        publish(&bus, &frame, k)?;
        if let Some(app) = app.as_mut() {
            if is_control_epoch(k, fps, ctl_cfg.t_ctrl_s) {
                app.tick(&bus, k);
            }
        }
        for c in gnb.apply(&bus, k, &mut world, &scene) {
            controls.push((k, c));
        }
        ticks.push(record(&world, &scene, fps));
        world = crate::twin::step_world(&scene, &world, gnb.target_x, dt);
    }

    let mut report = RunReport {
        scenario: cfg.name.clone(),
        mode: opts.mode,
        seed: opts.seed,
        noise: opts.noise,
        fps,
        duration_s: cfg.frame_count() as f64 * dt,
        nlos_s: 0.0,
        los_s: 0.0,
        mean_pl_db: 0.0,
        mean_snr_db: 0.0,
        mean_thr_bps: 0.0,
        transitions_s: Vec::new(),
        xapp_start_tick: start_tick,
        first_move_tick: None,
        localization: loc.finish(),
        ticks,
        decisions: app.map(|a| a.decisions().to_vec()).unwrap_or_default(),
        controls,
    };
    report.summarize(dt);
    Ok(report)
}

/// NLoS ticks of a report, for quick checks.
pub fn nlos_ticks(report: &RunReport) -> usize {
    report.ticks.iter().filter(|t| t.l_status == LosStatus::Nlos.as_u8()).count()
}
