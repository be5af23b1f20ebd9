use serde::{Deserialize, Serialize};

use super::estimate::ObstacleShape;
use super::state::StateVector;
use super::XappError;
use crate::sm::PosControl;
use crate::twin::{Action, ScenarioConfig};
use crate::units::meters_to_cm;

/// Anything that scores the three actions for a state.
pub trait QPolicy {
    fn q_values(&self, sv: &StateVector) -> [f64; 3];
}

impl<F: Fn(&StateVector) -> [f64; 3]> QPolicy for F {
    fn q_values(&self, sv: &StateVector) -> [f64; 3] {
        self(sv)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControllerConfig {
    pub t_ctrl_s: f64,
    /// Must equal the δ the policy was trained with.
    pub delta: f64,
    pub v_max: f64,
    /// Frames without a sighting before a track's velocity is frozen.
    pub stale_timeout_ticks: u64,
    pub ema_alpha: f64,
    pub fps: u32,
    pub obstacle: ObstacleShape,
}

impl ControllerConfig {
    pub fn from_scenario(s: &ScenarioConfig) -> Self {
        Self {
            t_ctrl_s: s.control.t_ctrl_s,
            delta: s.control.delta,
            v_max: s.control.v_max,
            stale_timeout_ticks: u64::from(s.fps),
            ema_alpha: 0.5,
            fps: s.fps,
            obstacle: ObstacleShape {
                half_extents: s.obstacle.half_extents,
                height: s.obstacle.height,
            },
        }
    }
}

/// Greedy choice; on exact ties the lowest index wins.
pub fn greedy_action(q: &[f64; 3]) -> Action {
    let mut best = 0;
    for i in 1..3 {
        if q[i] > q[best] {
            best = i;
        }
    }
    Action::from_index(best).expect("index < 3")
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decision {
    pub q: [f64; 3],
    pub action: Action,
    pub v_new: f64,
    pub x_target: f64,
    pub control: PosControl,
}

/// Steps 4–5: greedy action, new rail velocity, and the POS control message
/// for `x_target = x_gnb + v_new · T_ctrl`.
///
/// `gnb_yz_cm` is copied into the control message unchanged.
pub fn decide_and_control<P: QPolicy + ?Sized>(
    sv: &StateVector,
    cfg: &ControllerConfig,
    policy: Option<&P>,
    gnb_yz_cm: (i32, i32),
    tstamp: i64,
) -> Result<Decision, XappError> {
    let policy = policy.ok_or(XappError::PolicyNotLoaded)?;
    let q = policy.q_values(sv);
    let action = greedy_action(&q);
    let v_new = (sv.vx_gnb + action.direction() * cfg.delta).clamp(-cfg.v_max, cfg.v_max);
    let x_target = sv.x_gnb + v_new * cfg.t_ctrl_s;
    let control = PosControl { x: meters_to_cm(x_target), y: gnb_yz_cm.0, z: gnb_yz_cm.1, tstamp };
    Ok(Decision { q, action, v_new, x_target, control })
}
