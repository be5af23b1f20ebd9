//! Declarative scenario files: room, entities, schedules, link and control
//! constants.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::link::LinkModel;
use super::los::ObstacleBox;
use crate::geom::{Vec2, Vec3};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read scenario {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("cannot parse scenario: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid scenario: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Room {
    pub x: [f64; 2],
    pub y: [f64; 2],
    pub z: [f64; 2],
}

impl Room {
    pub fn contains(&self, p: Vec3) -> bool {
        let within = |v: f64, r: [f64; 2]| v >= r[0] && v <= r[1];
        within(p.x, self.x) && within(p.y, self.y) && within(p.z, self.z)
    }

    pub fn width(&self) -> f64 {
        self.x[1] - self.x[0]
    }

    pub fn depth(&self) -> f64 {
        self.y[1] - self.y[0]
    }

    /// Longest possible distance between two points in the room.
    pub fn diagonal(&self) -> f64 {
        Vec3::new(self.width(), self.depth(), self.z[1] - self.z[0]).norm()
    }
}

/// Camera definition. For the gNB-mounted camera `position` is the mount
/// offset from the gNB; for fixed cameras it is the global position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraConfig {
    pub id: i16,
    /// Agent name the camera reports through.
    pub agent: String,
    pub position: Vec3,
    /// Boresight as `[elevation, azimuth]`, radians.
    pub boresight: [f64; 2],
    pub fov_h: f64,
    pub fov_v: f64,
    pub image_w: u32,
    pub image_h: u32,
    pub range_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GnbConfig {
    pub id: i16,
    pub agent: String,
    pub start: Vec3,
    pub camera: CameraConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UeConfig {
    pub id: i16,
    /// Height of the handset above the floor.
    pub z: f64,
    /// Physical `[width, height]` of the person carrying the UE.
    pub extent: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Keyframe {
    pub t_s: f64,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObstacleConfig {
    pub id: i16,
    pub center: Vec2,
    pub half_extents: Vec2,
    pub height: f64,
    #[serde(default)]
    pub velocity: Vec2,
}

impl ObstacleConfig {
    pub fn to_box(&self) -> ObstacleBox {
        ObstacleBox {
            center: self.center,
            half_extents: self.half_extents,
            height: self.height,
            velocity: self.velocity,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlConfig {
    #[serde(rename = "T_ctrl_s")]
    pub t_ctrl_s: f64,
    pub delta: f64,
    pub v_max: f64,
    pub x_bounds: [f64; 2],
}

impl Default for ControlConfig {
    fn default() -> Self {
        Self { t_ctrl_s: 0.2, delta: 0.25, v_max: 1.0, x_bounds: [0.0, 8.0] }
    }
}

/// How training episodes randomize the scene.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainingConfig {
    pub episode_len: usize,
    /// UE waypoint region; `None` means the far half of the room.
    pub ue_region: Option<[[f64; 2]; 2]>,
    pub obstacle_jitter_m: f64,
    pub walk_speed: [f64; 2],
    pub dwell_s: [f64; 2],
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            episode_len: 125,
            ue_region: None,
            obstacle_jitter_m: 0.5,
            walk_speed: [0.6, 1.2],
            dwell_s: [1.0, 8.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub duration_s: f64,
    pub fps: u32,
    /// When the controller xApp starts issuing commands.
    pub xapp_start_s: f64,
    pub room: Room,
    pub gnb: GnbConfig,
    pub ue: UeConfig,
    pub ue_schedule: Vec<Keyframe>,
    pub obstacle: ObstacleConfig,
    pub cameras: Vec<CameraConfig>,
    pub link: LinkModel,
    pub control: ControlConfig,
    #[serde(default)]
    pub training: TrainingConfig,
}

impl ScenarioConfig {
    pub fn from_json(s: &str) -> Result<Self, ScenarioError> {
        let cfg: ScenarioConfig = serde_json::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ScenarioError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|source| ScenarioError::Io { path: path.display().to_string(), source })?;
        Self::from_json(&text)
    }

    pub fn frame_count(&self) -> u64 {
        (self.duration_s * f64::from(self.fps)).round() as u64
    }

    pub fn frame_period(&self) -> f64 {
        1.0 / f64::from(self.fps)
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let fail = |m: String| Err(ScenarioError::Invalid(m));
        let c = &self.control;
        if !(c.t_ctrl_s > 0.0) {
            return fail(format!("T_ctrl_s must be positive, got {}", c.t_ctrl_s));
        }
        if !(c.delta > 0.0) || !(c.v_max > 0.0) {
            return fail("delta and v_max must be positive".into());
        }
        if !(c.x_bounds[0] < c.x_bounds[1]) {
            return fail(format!("x_bounds {:?} must be increasing", c.x_bounds));
        }
        if self.fps == 0 || !(self.duration_s > 0.0) {
            return fail("fps and duration_s must be positive".into());
        }
        for r in [self.room.x, self.room.y, self.room.z] {
            if !(r[0] < r[1]) {
                return fail(format!("room range {r:?} must be increasing"));
            }
        }
        if c.x_bounds[0] < self.room.x[0] || c.x_bounds[1] > self.room.x[1] {
            return fail("gNB rail leaves the room".into());
        }
        if !self.room.contains(self.gnb.start) {
            return fail("gNB start outside the room".into());
        }
        if self.gnb.start.x < c.x_bounds[0] || self.gnb.start.x > c.x_bounds[1] {
            return fail("gNB start outside x_bounds".into());
        }
        if !self.obstacle.to_box().is_valid() {
            return fail("obstacle extents and height must be positive".into());
        }
        if self.ue_schedule.is_empty() {
            return fail("ue_schedule is empty".into());
        }
        if self.ue_schedule.windows(2).any(|w| w[1].t_s < w[0].t_s) {
            return fail("ue_schedule keyframes must be time-ordered".into());
        }
        for k in &self.ue_schedule {
            if !self.room.contains(Vec3::new(k.x, k.y, self.ue.z)) {
                return fail(format!("UE keyframe at t={} outside the room", k.t_s));
            }
        }
        if !self.link.is_valid() {
            return fail("link model requires A_obs ≥ 0, d_min > 0, bandwidth > 0".into());
        }
        for cam in self.cameras.iter().chain(std::iter::once(&self.gnb.camera)) {
            let fov_ok = |f: f64| f > 0.0 && f < std::f64::consts::PI;
            if !fov_ok(cam.fov_h) || !fov_ok(cam.fov_v) {
                return fail(format!("camera {} field of view must lie in (0, π)", cam.id));
            }
            if cam.image_w == 0 || cam.image_h == 0 || !(cam.range_max > 0.0) {
                return fail(format!("camera {} image size and range must be positive", cam.id));
            }
        }
        let mut agents = vec![self.gnb.agent.as_str()];
        for cam in &self.cameras {
            if !self.room.contains(cam.position) {
                return fail(format!("camera {} outside the room", cam.id));
            }
            // VIS indications carry no camera id, so each agent owns one camera.
            if agents.contains(&cam.agent.as_str()) {
                return fail(format!("agent {} reports more than one camera", cam.agent));
            }
            agents.push(&cam.agent);
        }
        if self.training.episode_len == 0 {
            return fail("training.episode_len must be positive".into());
        }
        Ok(())
    }
}

/// Piecewise-linear UE trajectory through time-stamped keyframes. Before the
/// first and after the last keyframe the UE holds still.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    keys: Vec<Keyframe>,
}

impl Trajectory {
    pub fn new(keys: Vec<Keyframe>) -> Self {
        assert!(!keys.is_empty(), "trajectory needs at least one keyframe");
        Self { keys }
    }

    pub fn keyframes(&self) -> &[Keyframe] {
        &self.keys
    }

    fn segment(&self, t: f64) -> Option<(&Keyframe, &Keyframe)> {
        // Right-continuous: at a keyframe time the following segment applies.
        self.keys.windows(2).find(|w| t >= w[0].t_s && t < w[1].t_s).map(|w| (&w[0], &w[1]))
    }

    pub fn position_at(&self, t: f64) -> Vec2 {
        match self.segment(t) {
            Some((a, b)) => {
                let s = (t - a.t_s) / (b.t_s - a.t_s);
                Vec2::new(a.x + s * (b.x - a.x), a.y + s * (b.y - a.y))
            }
            None if t < self.keys[0].t_s => Vec2::new(self.keys[0].x, self.keys[0].y),
            None => {
                let k = self.keys.last().expect("non-empty");
                Vec2::new(k.x, k.y)
            }
        }
    }

    pub fn velocity_at(&self, t: f64) -> Vec2 {
        match self.segment(t) {
            Some((a, b)) => {
                let dt = b.t_s - a.t_s;
                Vec2::new((b.x - a.x) / dt, (b.y - a.y) / dt)
            }
            None => Vec2::default(),
        }
    }
}
