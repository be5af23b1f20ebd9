//! Synthetic stand-in for the video function and the gNB's onboard camera.
//!
//! Detections are generated from ground truth: camera-relative geometry,
//! optional occlusion, Gaussian noise, then quantization to the service-model
//! units. Bounding boxes come from a pinhole projection of each entity's
//! physical size; the controller does not use them.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::geom::{cartesian_to_polar, global_to_camera, polar_to_cartesian, Vec3};
use crate::sm::{
    ObjectClass, PosDataEntry, PosIndication, VisDataEntry, VisIndication, PHI_LIMIT, THETA_LIMIT,
};
use crate::twin::{los_or_clear, CameraConfig, EntityPose, LosStatus, ObstacleBox, WorldState};
use crate::units::{meters_to_cm, rad_to_centirad};

#[derive(Debug, Clone, PartialEq)]
pub struct CameraModel {
    pub id: i16,
    pub agent: String,
    pub pose: EntityPose,
    pub fov_h: f64,
    pub fov_v: f64,
    pub image_w: u32,
    pub image_h: u32,
    pub focal_px: f64,
    pub range_max: f64,
    pub frame_period: f64,
}

impl CameraModel {
    /// A fixed camera at its configured global position.
    pub fn fixed(cfg: &CameraConfig, frame_period: f64) -> Self {
        Self::placed(cfg, cfg.position, frame_period)
    }

    /// A camera riding on `carrier`, offset by the configured mount position.
    pub fn mounted(cfg: &CameraConfig, carrier: &EntityPose, frame_period: f64) -> Self {
        let mut cam = Self::placed(cfg, carrier.position + cfg.position, frame_period);
        cam.pose.velocity = carrier.velocity;
        cam
    }

    fn placed(cfg: &CameraConfig, position: Vec3, frame_period: f64) -> Self {
        Self {
            id: cfg.id,
            agent: cfg.agent.clone(),
            pose: EntityPose { id: cfg.id, position, velocity: Vec3::default(), boresight: cfg.boresight },
            fov_h: cfg.fov_h,
            fov_v: cfg.fov_v,
            image_w: cfg.image_w,
            image_h: cfg.image_h,
            focal_px: f64::from(cfg.image_w) / (2.0 * (cfg.fov_h / 2.0).tan()),
            range_max: cfg.range_max,
            frame_period,
        }
    }

    /// Whether a camera-frame point lies inside the viewing frustum.
    pub fn in_frustum(&self, v: Vec3) -> bool {
        v.x > 0.0
            && v.norm() <= self.range_max
            && v.y.abs() <= v.x * (self.fov_h / 2.0).tan()
            && v.z.abs() <= v.x * (self.fov_v / 2.0).tan()
    }
}

/// Detection noise for one camera.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseModel {
    /// Range noise standard deviation, cm.
    pub sigma_r: f64,
    /// Angle noise standard deviation, rad.
    pub sigma_angle: f64,
    /// Probability that a detection is lost in a frame.
    pub drop_prob: f64,
    pub seed: u64,
}

impl NoiseModel {
    /// Noise level that reproduces centimeter-scale localization error in
    /// the evaluation room.
    pub fn calibrated(seed: u64) -> Self {
        Self { sigma_r: 6.0, sigma_angle: 0.008, drop_prob: 0.02, seed }
    }

    pub fn zero(seed: u64) -> Self {
        Self { sigma_r: 0.0, sigma_angle: 0.0, drop_prob: 0.0, seed }
    }

    pub fn is_valid(&self) -> bool {
        self.sigma_r >= 0.0 && self.sigma_angle >= 0.0 && (0.0..1.0).contains(&self.drop_prob)
    }
}

struct Target {
    id: i16,
    class: ObjectClass,
    point: Vec3,
    /// Physical `[width, height]`, m.
    extent: [f64; 2],
    can_be_occluded: bool,
}

fn targets(world: &WorldState) -> [Target; 2] {
    let o = &world.obstacle;
    [
        Target {
            id: world.ue.id,
            class: ObjectClass::Person,
            point: world.ue.position,
            extent: world.ue_extent,
            can_be_occluded: true,
        },
        Target {
            id: world.obstacle_id,
            class: ObjectClass::Obstacle,
            point: world.obstacle_pose().position,
            extent: [2.0 * o.half_extents.x.max(o.half_extents.y), o.height],
            can_be_occluded: false,
        },
    ]
}

/// Detections of the UE and obstacle as seen by `cam`.
///
/// An entity is reported when it lies in the frustum and range, is not
/// hidden behind `occluder` and survives the drop draw. Measured range and
/// angles carry Gaussian noise and are quantized to cm and rad × 100; a
/// noisy measurement that falls outside the frustum is discarded.
pub fn observe(
    cam: &CameraModel,
    world: &WorldState,
    noise: &NoiseModel,
    rng: &mut impl Rng,
    occluder: Option<&ObstacleBox>,
    tstamp: i64,
) -> VisIndication {
    let mut entries = Vec::new();
    for t in targets(world) {
        let v = global_to_camera(cam.pose.boresight, t.point - cam.pose.position);
        if !cam.in_frustum(v) {
            continue;
        }
        if let (true, Some(obs)) = (t.can_be_occluded, occluder) {
            if los_or_clear(cam.pose.position, t.point, obs) == LosStatus::Nlos {
                continue;
            }
        }
        // Fixed draw pattern per visible target keeps streams aligned.
        let n_r: f64 = rng.sample(StandardNormal);
        let n_theta: f64 = rng.sample(StandardNormal);
        let n_phi: f64 = rng.sample(StandardNormal);
        let dropped = rng.gen::<f64>() < noise.drop_prob;
        if dropped {
            continue;
        }
        let (r, theta, phi) = cartesian_to_polar(v);
        let r = (r + n_r * noise.sigma_r / 100.0).max(0.0);
        let theta = theta + n_theta * noise.sigma_angle;
        let phi = wrap_angle(phi + n_phi * noise.sigma_angle);

        let r_cm = meters_to_cm(r);
        let theta_q = rad_to_centirad(theta).clamp(-THETA_LIMIT, THETA_LIMIT);
        let phi_q = rad_to_centirad(phi).clamp(-PHI_LIMIT, PHI_LIMIT);
        let measured = polar_to_cartesian(f64::from(r_cm) / 100.0, theta_q as f64 / 100.0, phi_q as f64 / 100.0);
        if !cam.in_frustum(measured) {
            continue;
        }

        let (cx, cy) = (f64::from(cam.image_w) / 2.0, f64::from(cam.image_h) / 2.0);
        let f = cam.focal_px;
        entries.push(VisDataEntry {
            id: t.id,
            cls: t.class.code(),
            bbx: (cx - f * v.y / v.x).round() as i32,
            bby: (cy - f * v.z / v.x).round() as i32,
            bbw: ((f * t.extent[0] / v.x).round() as i32).max(1),
            bbh: ((f * t.extent[1] / v.x).round() as i32).max(1),
            theta: theta_q,
            phi: phi_q,
            r: r_cm,
        });
    }
    VisIndication::new(entries, tstamp)
}

fn wrap_angle(a: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    let w = a.rem_euclid(TAU);
    if w > PI {
        w - TAU
    } else {
        w
    }
}

/// POS entry for one entity: positions in cm, velocities in cm/s, camera
/// boresight in rad × 100.
pub fn pose_entry(e: &EntityPose) -> PosDataEntry {
    PosDataEntry {
        id: e.id,
        x: meters_to_cm(e.position.x),
        y: meters_to_cm(e.position.y),
        z: meters_to_cm(e.position.z),
        vx: meters_to_cm(e.velocity.x),
        vy: meters_to_cm(e.velocity.y),
        vz: meters_to_cm(e.velocity.z),
        theta: rad_to_centirad(e.boresight[0]),
        phi: rad_to_centirad(wrap_angle(e.boresight[1])),
    }
}

pub fn report_pose(entities: &[EntityPose], tstamp: i64) -> PosIndication {
    PosIndication::new(entities.iter().map(pose_entry).collect(), tstamp)
}

/// What a camera on the gNB would report: detections with the obstacle as
/// occluder, plus POS for the gNB and its camera.
pub fn gnb_viewpoint(
    world: &WorldState,
    gnb_cam: &CameraConfig,
    frame_period: f64,
    noise: &NoiseModel,
    rng: &mut impl Rng,
    tstamp: i64,
) -> (VisIndication, PosIndication) {
    let cam = CameraModel::mounted(gnb_cam, &world.gnb, frame_period);
    let vis = observe(&cam, world, noise, rng, Some(&world.obstacle), tstamp);
    let pos = report_pose(&[world.gnb, cam.pose], tstamp);
    (vis, pos)
}
