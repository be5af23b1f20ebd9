//! Steps 1–3 of the controller loop: polar detections to global positions,
//! multi-camera averaging, and frame-difference velocities.

use serde::{Deserialize, Serialize};

use super::XappError;
use crate::geom::{camera_to_global, polar_to_cartesian, Vec2, Vec3};
use crate::sm::{PosDataEntry, VisDataEntry};
use crate::twin::{los_or_clear, LosStatus, ObstacleBox};
use crate::units::{centirad_to_rad, cm_to_meters};

/// Global position of a detection, from the reporting camera's POS entry.
///
/// ```
/// use visionran::sm::{PosDataEntry, VisDataEntry};
/// use visionran::xapp::estimate_position;
///
/// let cam = PosDataEntry::default(); // origin, boresight along +x
/// let det = VisDataEntry { r: 500, bbw: 1, bbh: 1, ..Default::default() };
/// let p = estimate_position(&cam, &det);
/// assert_eq!((p.x, p.y, p.z), (5.0, 0.0, 0.0));
/// ```
pub fn estimate_position(cam: &PosDataEntry, det: &VisDataEntry) -> Vec3 {
    let origin = Vec3::new(cm_to_meters(cam.x), cm_to_meters(cam.y), cm_to_meters(cam.z));
    let boresight = [centirad_to_rad(cam.theta), centirad_to_rad(cam.phi)];
    let local = polar_to_cartesian(
        cm_to_meters(det.r),
        centirad_to_rad(det.theta),
        centirad_to_rad(det.phi),
    );
    origin + camera_to_global(boresight, local)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fused {
    pub position: Vec3,
    /// No source saw the entity this frame; `position` is the last known one.
    pub coasting: bool,
    pub source_count: usize,
}

/// Unweighted component-wise mean of this frame's estimates, or the last
/// known position when there are none.
pub fn fuse(estimates: &[Vec3], last_known: Option<Vec3>) -> Result<Fused, XappError> {
    if estimates.is_empty() {
        return last_known
            .map(|position| Fused { position, coasting: true, source_count: 0 })
            .ok_or(XappError::NoEstimateEver);
    }
    let n = estimates.len() as f64;
    let sum = estimates.iter().fold(Vec3::default(), |acc, &p| acc + p);
    Ok(Fused { position: sum * (1.0 / n), coasting: false, source_count: estimates.len() })
}

/// Fused track of one object.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackedEntity {
    pub id: i16,
    pub position: Vec3,
    pub velocity: Vec2,
    /// Timestamp of the last frame that contributed, µs.
    pub last_seen_us: i64,
    pub last_seen_tick: u64,
    pub source_count: usize,
    pub coasting: bool,
}

/// Frame-difference velocity smoothed by an exponential moving average.
/// `alpha = 1` is the raw difference quotient; a first observation has zero
/// velocity.
pub fn estimate_velocity(prev: Option<&TrackedEntity>, new_pos: Vec2, dt: f64, alpha: f64) -> Vec2 {
    let Some(track) = prev else {
        return Vec2::default();
    };
    if !(dt > 0.0) {
        return track.velocity;
    }
    let raw = (new_pos - track.position.xy()) * (1.0 / dt);
    raw * alpha + track.velocity * (1.0 - alpha)
}

impl TrackedEntity {
    /// Folds one fused frame into the track.
    pub fn update(prev: Option<&TrackedEntity>, id: i16, fused: Fused, tstamp_us: i64, tick: u64, alpha: f64) -> Self {
        if fused.coasting {
            let mut t = *prev.expect("coasting requires a prior track");
            t.coasting = true;
            t.source_count = 0;
            return t;
        }
        let dt = prev.map_or(0.0, |p| (tstamp_us - p.last_seen_us) as f64 / 1e6);
        let velocity = estimate_velocity(prev, fused.position.xy(), dt, alpha);
        TrackedEntity {
            id,
            position: fused.position,
            velocity,
            last_seen_us: tstamp_us,
            last_seen_tick: tick,
            source_count: fused.source_count,
            coasting: false,
        }
    }
}

/// Obstacle geometry the controller assumes, from configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObstacleShape {
    pub half_extents: Vec2,
    pub height: f64,
}

/// Line-of-sight verdict from estimated positions.
pub fn infer_los(gnb: Vec3, ue: Vec3, obstacle_center: Vec2, shape: &ObstacleShape) -> LosStatus {
    let obs = ObstacleBox {
        center: obstacle_center,
        half_extents: shape.half_extents,
        height: shape.height,
        velocity: Vec2::default(),
    };
    los_or_clear(gnb, ue, &obs)
}
