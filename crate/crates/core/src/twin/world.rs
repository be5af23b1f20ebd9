use serde::Serialize;

use super::link::LinkModel;
use super::los::{los_or_clear, LosStatus, ObstacleBox};
use super::scenario::{CameraConfig, ControlConfig, Room, ScenarioConfig, Trajectory};
use crate::geom::{Vec2, Vec3};

/// Ground-truth pose of one entity, SI units, global frame.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct EntityPose {
    pub id: i16,
    pub position: Vec3,
    pub velocity: Vec3,
    /// `[elevation, azimuth]` in radians; meaningful for cameras only.
    pub boresight: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WorldState {
    pub tick: u64,
    pub t_s: f64,
    pub gnb: EntityPose,
    pub ue: EntityPose,
    /// Physical `[width, height]` of the person carrying the UE.
    pub ue_extent: [f64; 2],
    pub obstacle_id: i16,
    pub obstacle: ObstacleBox,
    /// Fixed cameras. The gNB-mounted camera follows the gNB and is derived
    /// on demand.
    pub cameras: Vec<EntityPose>,
    pub los: LosStatus,
}

impl WorldState {
    pub fn distance(&self) -> f64 {
        (self.ue.position - self.gnb.position).norm()
    }

    pub fn obstacle_pose(&self) -> EntityPose {
        EntityPose {
            id: self.obstacle_id,
            position: self.obstacle.center.extend(self.obstacle.height / 2.0),
            velocity: self.obstacle.velocity.extend(0.0),
            boresight: [0.0, 0.0],
        }
    }
}

/// Static description of the world that a [`WorldState`] evolves in.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub room: Room,
    pub control: ControlConfig,
    pub link: LinkModel,
    pub gnb_id: i16,
    pub gnb_start: Vec3,
    pub gnb_camera: CameraConfig,
    pub ue_id: i16,
    pub ue_z: f64,
    pub ue_extent: [f64; 2],
    pub ue_path: Trajectory,
    pub obstacle_id: i16,
    pub obstacle: ObstacleBox,
    pub cameras: Vec<CameraConfig>,
}

impl Scene {
    pub fn from_config(cfg: &ScenarioConfig) -> Self {
        Self {
            room: cfg.room.clone(),
            control: cfg.control,
            link: cfg.link,
            gnb_id: cfg.gnb.id,
            gnb_start: cfg.gnb.start,
            gnb_camera: cfg.gnb.camera.clone(),
            ue_id: cfg.ue.id,
            ue_z: cfg.ue.z,
            ue_extent: cfg.ue.extent,
            ue_path: Trajectory::new(cfg.ue_schedule.clone()),
            obstacle_id: cfg.obstacle.id,
            obstacle: cfg.obstacle.to_box(),
            cameras: cfg.cameras.clone(),
        }
    }

    pub fn initial_state(&self) -> WorldState {
        let gnb = EntityPose { id: self.gnb_id, position: self.gnb_start, ..Default::default() };
        let ue = self.ue_pose_at(0.0);
        let cameras = self
            .cameras
            .iter()
            .map(|c| EntityPose {
                id: c.id,
                position: c.position,
                velocity: Vec3::default(),
                boresight: c.boresight,
            })
            .collect();
        let los = los_or_clear(gnb.position, ue.position, &self.obstacle);
        WorldState {
            tick: 0,
            t_s: 0.0,
            gnb,
            ue,
            ue_extent: self.ue_extent,
            obstacle_id: self.obstacle_id,
            obstacle: self.obstacle,
            cameras,
            los,
        }
    }

    fn ue_pose_at(&self, t: f64) -> EntityPose {
        EntityPose {
            id: self.ue_id,
            position: self.ue_path.position_at(t).extend(self.ue_z),
            velocity: self.ue_path.velocity_at(t).extend(0.0),
            boresight: [0.0, 0.0],
        }
    }
}

/// Signed speed the gNB platform adopts to reach `target_x` within one
/// control interval, limited to `v_max`.
pub fn commanded_velocity(current_x: f64, target_x: f64, control: &ControlConfig) -> f64 {
    ((target_x - current_x) / control.t_ctrl_s).clamp(-control.v_max, control.v_max)
}

/// Advances the world by `dt` seconds.
///
/// The gNB travels toward `gnb_target_x` at the speed stored in its velocity
/// (clamped to `v_max`) and stops on arrival; leaving the rail clamps the
/// position and zeroes the velocity. The UE follows its trajectory and the
/// obstacle drifts with its own velocity.
pub fn step_world(scene: &Scene, state: &WorldState, gnb_target_x: f64, dt: f64) -> WorldState {
    assert!(dt > 0.0, "dt must be positive");
    let ctl = &scene.control;
    let mut next = state.clone();

    let mut vx = state.gnb.velocity.x.clamp(-ctl.v_max, ctl.v_max);
    let gap = gnb_target_x - state.gnb.position.x;
    let travel = (vx.abs() * dt).min(gap.abs());
    let mut x = state.gnb.position.x + travel.copysign(gap);
    if x < ctl.x_bounds[0] || x > ctl.x_bounds[1] {
        x = x.clamp(ctl.x_bounds[0], ctl.x_bounds[1]);
        vx = 0.0;
    }
    next.gnb.position.x = x;
    next.gnb.velocity = Vec3::new(vx, 0.0, 0.0);

    next.t_s = state.t_s + dt;
    next.tick = state.tick + 1;
    next.ue = scene.ue_pose_at(next.t_s);

    let obs = &mut next.obstacle;
    let moved = obs.center + obs.velocity * dt;
    let lo = Vec2::new(scene.room.x[0], scene.room.y[0]) + obs.half_extents;
    let hi = Vec2::new(scene.room.x[1], scene.room.y[1]) - obs.half_extents;
    let clamped = Vec2::new(moved.x.clamp(lo.x, hi.x), moved.y.clamp(lo.y, hi.y));
    if clamped != moved {
        obs.velocity = Vec2::default();
    }
    obs.center = clamped;

    next.los = los_or_clear(next.gnb.position, next.ue.position, &next.obstacle);
    next
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::twin::scenario::Keyframe;
    use crate::twin::ScenarioConfig;

    pub(crate) fn scene() -> Scene {
        let cfg = ScenarioConfig::from_json(include_str!("../../../../scenarios/paper_v.json"))
            .expect("shipped scenario parses");
        Scene::from_config(&cfg)
    }

    #[test]
    fn holding_target_keeps_position() {
        let s = scene();
        let mut st = s.initial_state();
        st.gnb.velocity.x = 0.5;
        let x0 = st.gnb.position.x;
        let next = step_world(&s, &st, x0, 0.2);
        assert_eq!(next.gnb.position.x, x0);
    }

    #[test]
    fn target_beyond_rail_clamps() {
        let s = scene();
        let mut st = s.initial_state();
        st.gnb.position.x = 7.9;
        st.gnb.velocity.x = 1.0;
        let next = step_world(&s, &st, 9.0, 0.2);
        assert_eq!(next.gnb.position.x, s.control.x_bounds[1]);
        assert_eq!(next.gnb.velocity.x, 0.0);
    }

    #[test]
    fn gnb_stops_on_target() {
        let s = scene();
        let mut st = s.initial_state();
        st.gnb.velocity.x = 1.0;
        let x0 = st.gnb.position.x;
        let a = step_world(&s, &st, x0 + 0.05, 0.2);
        assert!((a.gnb.position.x - (x0 + 0.05)).abs() < 1e-12);
        let b = step_world(&s, &st, x0 + 1.0, 0.2);
        assert!((b.gnb.position.x - (x0 + 0.2)).abs() < 1e-12);
    }

    #[test]
    fn ue_leaves_a_right_after_ten_and_a_half_seconds() {
        let s = scene();
        let a = s.ue_path.keyframes()[0];
        let fps = 12.0;
        let mut st = s.initial_state();
        for _ in 0..126 {
            st = step_world(&s, &st, st.gnb.position.x, 1.0 / fps);
        }
        assert_eq!(st.tick, 126);
        assert!((st.ue.position.x - a.x).abs() < 1e-9 && (st.ue.position.y - a.y).abs() < 1e-9);
        let next = step_world(&s, &st, st.gnb.position.x, 1.0 / fps);
        assert!((next.ue.position.x - a.x).abs() > 1e-3);
    }

    #[test]
    fn moving_obstacle_stops_at_the_wall() {
        let mut s = scene();
        s.obstacle.velocity = Vec2::new(10.0, 0.0);
        s.ue_path = Trajectory::new(vec![Keyframe { t_s: 0.0, x: 1.0, y: 9.0 }]);
        let mut st = s.initial_state();
        for _ in 0..10 {
            st = step_world(&s, &st, st.gnb.position.x, 0.2);
        }
        assert_eq!(st.obstacle.center.x, s.room.x[1] - s.obstacle.half_extents.x);
        assert_eq!(st.obstacle.velocity, Vec2::default());
    }
}
