//! Line-of-sight test between the gNB and the UE.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{Vec2, Vec3};

/// `L_status`: 0 = line of sight, 1 = blocked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum LosStatus {
    #[default]
    Los,
    Nlos,
}

impl LosStatus {
    pub fn as_u8(self) -> u8 {
        match self {
            LosStatus::Los => 0,
            LosStatus::Nlos => 1,
        }
    }

    pub fn as_f64(self) -> f64 {
        f64::from(self.as_u8())
    }

    pub fn is_nlos(self) -> bool {
        self == LosStatus::Nlos
    }
}

/// A box standing on the floor, axis-aligned in the floor plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObstacleBox {
    pub center: Vec2,
    pub half_extents: Vec2,
    pub height: f64,
    #[serde(default)]
    pub velocity: Vec2,
}

impl ObstacleBox {
    pub fn contains_xy(&self, p: Vec2) -> bool {
        (p.x - self.center.x).abs() <= self.half_extents.x
            && (p.y - self.center.y).abs() <= self.half_extents.y
    }

    pub fn is_valid(&self) -> bool {
        self.half_extents.x > 0.0 && self.half_extents.y > 0.0 && self.height > 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Error)]
#[error("gNB and UE coincide; line of sight is undefined")]
pub struct DegenerateSegment;

/// Returns `Nlos` iff the closed segment `gnb → ue` meets the obstacle.
///
/// The floor-plane projection is clipped against the footprint rectangle;
/// the crossing then blocks if the segment is at or below the box top
/// anywhere inside it. Since height is linear along the segment, checking
/// the two ends of the clipped interval is enough.
pub fn compute_los(gnb: Vec3, ue: Vec3, obs: &ObstacleBox) -> Result<LosStatus, DegenerateSegment> {
    if gnb == ue {
        return Err(DegenerateSegment);
    }
    let Some((t0, t1)) = clip_to_footprint(gnb.xy(), ue.xy(), obs) else {
        return Ok(LosStatus::Los);
    };
    let z_at = |t: f64| gnb.z + t * (ue.z - gnb.z);
    if z_at(t0).min(z_at(t1)) <= obs.height {
        Ok(LosStatus::Nlos)
    } else {
        Ok(LosStatus::Los)
    }
}

/// [`compute_los`] with the coincident-endpoint convention applied (LoS).
pub fn los_or_clear(gnb: Vec3, ue: Vec3, obs: &ObstacleBox) -> LosStatus {
    compute_los(gnb, ue, obs).unwrap_or(LosStatus::Los)
}

/// Liang–Barsky clip of `a + t (b − a)`, `t ∈ [0, 1]`, against the closed
/// footprint. Returns the parameter interval inside, if any.
fn clip_to_footprint(a: Vec2, b: Vec2, obs: &ObstacleBox) -> Option<(f64, f64)> {
    let d = b - a;
    let lo = obs.center - obs.half_extents;
    let hi = obs.center + obs.half_extents;
    let edges = [(-d.x, a.x - lo.x), (d.x, hi.x - a.x), (-d.y, a.y - lo.y), (d.y, hi.y - a.y)];
    let (mut t0, mut t1) = (0.0_f64, 1.0_f64);
    for (p, q) in edges {
        if p == 0.0 {
            if q < 0.0 {
                return None;
            }
        } else {
            let r = q / p;
            if p < 0.0 {
                t0 = t0.max(r);
            } else {
                t1 = t1.min(r);
            }
        }
    }
    (t0 <= t1).then_some((t0, t1))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obs(cx: f64, cy: f64, h: f64) -> ObstacleBox {
        ObstacleBox {
            center: Vec2::new(cx, cy),
            half_extents: Vec2::new(h, h),
            height: 2.0,
            velocity: Vec2::default(),
        }
    }

    #[test]
    fn segment_through_center_is_blocked() {
        let s = compute_los(Vec3::new(0., 0., 1.), Vec3::new(8., 0., 1.), &obs(4., 0., 0.5));
        assert_eq!(s, Ok(LosStatus::Nlos));
    }

    #[test]
    fn segment_missing_box_is_clear() {
        let s = compute_los(Vec3::new(0., 0., 1.), Vec3::new(0., 8., 1.), &obs(4., 4., 0.5));
        assert_eq!(s, Ok(LosStatus::Los));
    }

    #[test]
    fn touching_a_corner_counts_as_blocked() {
        // Diagonal through the corner (3.5, 3.5) of a box centered at (4, 4).
        let s = compute_los(Vec3::new(0., 7., 1.), Vec3::new(7., 0., 1.), &obs(4., 4., 0.5));
        assert_eq!(s, Ok(LosStatus::Nlos));
        let s = compute_los(Vec3::new(0., 6.99, 1.), Vec3::new(6.99, 0., 1.), &obs(4., 4., 0.5));
        assert_eq!(s, Ok(LosStatus::Los));
    }

    #[test]
    fn segment_over_the_top_is_clear() {
        let s = compute_los(Vec3::new(0., 0., 2.5), Vec3::new(8., 0., 2.5), &obs(4., 0., 0.5));
        assert_eq!(s, Ok(LosStatus::Los));
        // Rising segment that is still below the top inside the footprint.
        let s = compute_los(Vec3::new(0., 0., 1.0), Vec3::new(8., 0., 3.0), &obs(4., 0., 0.5));
        assert_eq!(s, Ok(LosStatus::Nlos));
    }

    #[test]
    fn coincident_endpoints_are_flagged() {
        let p = Vec3::new(1., 1., 1.);
        assert_eq!(compute_los(p, p, &obs(4., 0., 0.5)), Err(DegenerateSegment));
        assert_eq!(los_or_clear(p, p, &obs(1., 1., 0.5)), LosStatus::Los);
    }

    #[test]
    fn endpoint_inside_footprint_is_blocked() {
        let s = compute_los(Vec3::new(4., 0., 1.), Vec3::new(4., 8., 1.), &obs(4., 0., 0.5));
        assert_eq!(s, Ok(LosStatus::Nlos));
    }
}
