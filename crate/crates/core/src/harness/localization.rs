use serde::{Deserialize, Serialize};

use super::run::{run_with, FrameReports, Mode, NoiseProfile, RunOptions};
use super::HarnessError;
use crate::geom::{Vec2, Vec3};
use crate::sm::ObjectClass;
use crate::twin::ScenarioConfig;
use crate::xapp::{estimate_position, fuse, StateVector};

/// Estimate summary on one axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisStats {
    /// Mean ground-truth coordinate over the evaluated frames.
    pub gt: f64,
    pub mean: f64,
    pub max: f64,
    pub min: f64,
    /// Mean absolute per-frame error.
    pub mean_deviation: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalizationStats {
    pub frames: usize,
    /// Frames in which at least one camera produced an estimate.
    pub estimated_frames: usize,
    pub x: AxisStats,
    pub y: AxisStats,
}

#[derive(Default)]
struct Axis {
    gt_sum: f64,
    sum: f64,
    dev_sum: f64,
    max: f64,
    min: f64,
}

impl Axis {
    fn push(&mut self, est: f64, gt: f64, first: bool) {
        self.gt_sum += gt;
        self.sum += est;
        self.dev_sum += (est - gt).abs();
        self.max = if first { est } else { self.max.max(est) };
        self.min = if first { est } else { self.min.min(est) };
    }

    fn finish(&self, n: usize, fallback_gt: f64) -> AxisStats {
        if n == 0 {
            return AxisStats { gt: fallback_gt, mean: f64::NAN, max: f64::NAN, min: f64::NAN, mean_deviation: f64::NAN };
        }
        let n = n as f64;
        AxisStats {
            gt: self.gt_sum / n,
            // Summation rounding can push a constant series' mean an ulp past its extremes.
            mean: (self.sum / n).clamp(self.min, self.max),
            max: self.max,
            min: self.min,
            mean_deviation: self.dev_sum / n,
        }
    }
}

pub(crate) struct LocalizationAccumulator {
    initial_gt: Vec2,
    frames: usize,
    n: usize,
    x: Axis,
    y: Axis,
}

impl LocalizationAccumulator {
    pub(crate) fn new(initial_gt: Vec2) -> Self {
        Self { initial_gt, frames: 0, n: 0, x: Axis::default(), y: Axis::default() }
    }

    pub(crate) fn push(&mut self, est: Vec2, gt: Vec2) {
        let first = self.n == 0;
        self.x.push(est.x, gt.x, first);
        self.y.push(est.y, gt.y, first);
        self.n += 1;
    }

    pub(crate) fn count_frame(&mut self) {
        self.frames += 1;
    }

    pub(crate) fn finish(&self) -> LocalizationStats {
        LocalizationStats {
            frames: self.frames.max(self.n),
            estimated_frames: self.n,
            x: self.x.finish(self.n, self.initial_gt.x),
            y: self.y.finish(self.n, self.initial_gt.y),
        }
    }
}

/// Steps 1–2 of the controller on a single frame: every camera's detection
/// of `class` mapped to global coordinates and averaged.
pub(crate) fn fuse_frame(cfg: &ScenarioConfig, frame: &FrameReports, class: ObjectClass) -> Option<Vec3> {
    let mut estimates = Vec::new();
    for (agent, pos, vis) in &frame.messages {
        let cam_id = if agent.0 == cfg.gnb.agent {
            cfg.gnb.camera.id
        } else {
            cfg.cameras.iter().find(|c| c.agent == agent.0)?.id
        };
        let Some(cam) = pos.pos_stats.iter().find(|e| e.id == cam_id) else {
            continue;
        };
        estimates.extend(vis.vis_stats.iter().filter(|d| d.cls == class.code()).map(|d| estimate_position(cam, d)));
    }
    fuse(&estimates, None).ok().map(|f| f.position)
}

/// Obstacle localization over every frame of the scenario with a static
/// gNB.
pub fn eval_localization(cfg: &ScenarioConfig, noise: NoiseProfile, seed: u64) -> Result<LocalizationStats, HarnessError> {
    cfg.validate().map_err(|e| HarnessError::Scenario(e.to_string()))?;
    let opts = RunOptions { mode: Mode::Static, seed, noise };
    let report = run_with::<fn(&StateVector) -> [f64; 3]>(cfg, &opts, None)?;
    Ok(report.localization)
}
