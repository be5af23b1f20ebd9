use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::twin::{LosStatus, ScenarioConfig, WorldState};

pub const STATE_DIM: usize = 11;

/// Feature names in the order the DQN consumes them. Policy files record
/// this list and refuse to load if it differs.
pub const FEATURE_ORDER: [&str; STATE_DIM] = [
    "x_gnb", "x_gnb_ue", "y_gnb_ue", "x_gnb_obs", "y_gnb_obs", "vx_gnb", "vx_ue", "vy_ue", "vx_obs",
    "vy_obs", "L_status",
];

/// DQN observation. Positions in meters, velocities in m/s; relative
/// positions are `target − gNB`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StateVector {
    pub x_gnb: f64,
    pub x_gnb_ue: f64,
    pub y_gnb_ue: f64,
    pub x_gnb_obs: f64,
    pub y_gnb_obs: f64,
    pub vx_gnb: f64,
    pub vx_ue: f64,
    pub vy_ue: f64,
    pub vx_obs: f64,
    pub vy_obs: f64,
    pub l_status: LosStatus,
}

impl StateVector {
    pub fn to_array(&self) -> [f64; STATE_DIM] {
        [
            self.x_gnb,
            self.x_gnb_ue,
            self.y_gnb_ue,
            self.x_gnb_obs,
            self.y_gnb_obs,
            self.vx_gnb,
            self.vx_ue,
            self.vy_ue,
            self.vx_obs,
            self.vy_obs,
            self.l_status.as_f64(),
        ]
    }

    /// Inverse of [`to_array`](Self::to_array). `L_status` must be 0 or 1.
    pub fn from_array(a: &[f64; STATE_DIM]) -> Option<Self> {
        let l_status = match a[10] {
            0.0 => LosStatus::Los,
            1.0 => LosStatus::Nlos,
            _ => return None,
        };
        Some(Self {
            x_gnb: a[0],
            x_gnb_ue: a[1],
            y_gnb_ue: a[2],
            x_gnb_obs: a[3],
            y_gnb_obs: a[4],
            vx_gnb: a[5],
            vx_ue: a[6],
            vy_ue: a[7],
            vx_obs: a[8],
            vy_obs: a[9],
            l_status,
        })
    }

    /// The observation a perfectly informed agent would build.
    pub fn from_truth(w: &WorldState) -> Self {
        let g = w.gnb.position;
        Self {
            x_gnb: g.x,
            x_gnb_ue: w.ue.position.x - g.x,
            y_gnb_ue: w.ue.position.y - g.y,
            x_gnb_obs: w.obstacle.center.x - g.x,
            y_gnb_obs: w.obstacle.center.y - g.y,
            vx_gnb: w.gnb.velocity.x,
            vx_ue: w.ue.velocity.x,
            vy_ue: w.ue.velocity.y,
            vx_obs: w.obstacle.velocity.x,
            vy_obs: w.obstacle.velocity.y,
            l_status: w.los,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("invalid normalization: {0}")]
pub struct NormalizationError(pub String);

/// Affine per-feature map `(v − offset) / scale` taking the scenario's
/// feature ranges into roughly `[−1, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Normalization {
    pub offset: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Normalization {
    pub fn from_scenario(cfg: &ScenarioConfig) -> Self {
        let [x0, x1] = cfg.control.x_bounds;
        let w = cfg.room.width();
        let d = cfg.room.depth();
        let v = cfg.control.v_max;
        let walk = cfg.training.walk_speed[1].max(v);
        Self {
            offset: vec![(x0 + x1) / 2.0, 0., 0., 0., 0., 0., 0., 0., 0., 0., 0.],
            scale: vec![(x1 - x0) / 2.0, w, d, w, d, v, walk, walk, walk, walk, 1.0],
        }
    }

    pub fn validate(&self) -> Result<(), NormalizationError> {
        if self.offset.len() != STATE_DIM || self.scale.len() != STATE_DIM {
            return Err(NormalizationError(format!(
                "expected {STATE_DIM} offsets and scales, got {} and {}",
                self.offset.len(),
                self.scale.len()
            )));
        }
        if self.scale.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(NormalizationError("scales must be finite and positive".into()));
        }
        Ok(())
    }

    pub fn apply(&self, sv: &StateVector) -> Vec<f64> {
        sv.to_array()
            .iter()
            .zip(self.offset.iter().zip(&self.scale))
            .map(|(v, (o, s))| (v - o) / s)
            .collect()
    }
}
