//! The controller xApp driven by the virtual clock.

use std::collections::{BTreeMap, HashMap};

use super::control::{decide_and_control, ControllerConfig, Decision, QPolicy};
use super::estimate::{estimate_position, fuse, infer_los, TrackedEntity};
use super::state::StateVector;
use super::XappError;
use crate::geom::{Vec2, Vec3};
use crate::sm::{
    AgentId, BusEnvelope, E2Bus, MessageKind, ObjectClass, PosControl, PosDataEntry, PosIndication,
    ServiceModelMessage, SubscriberId, VisIndication,
};
use crate::units::{cm_to_meters, tick_to_micros};

/// Which agent reports which camera.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceBinding {
    pub agent: AgentId,
    pub camera_id: i16,
}

/// One row of the decision log.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionRecord {
    pub tick: u64,
    pub t_s: f64,
    pub state: StateVector,
    pub decision: Decision,
}

#[derive(Debug, Clone, Copy)]
struct KnownPose {
    entry: PosDataEntry,
    tick: u64,
}

pub struct VisionApp<P> {
    cfg: ControllerConfig,
    policy: Option<P>,
    me: AgentId,
    sub: SubscriberId,
    gnb_agent: AgentId,
    gnb_id: i16,
    sources: Vec<SourceBinding>,
    cameras: HashMap<i16, KnownPose>,
    gnb: Option<KnownPose>,
    tracks: BTreeMap<ObjectClass, TrackedEntity>,
    log: Vec<DecisionRecord>,
    faults: Vec<(u64, XappError)>,
}

impl<P: QPolicy> VisionApp<P> {
    /// Subscribes to POS and VIS indications on `bus`.
    pub fn new(
        cfg: ControllerConfig,
        policy: Option<P>,
        bus: &E2Bus,
        gnb_agent: AgentId,
        gnb_id: i16,
        sources: Vec<SourceBinding>,
    ) -> Self {
        let sub = bus.subscribe(&[MessageKind::PosInd, MessageKind::VisInd]);
        Self {
            cfg,
            policy,
            me: AgentId::new("visionapp"),
            sub,
            gnb_agent,
            gnb_id,
            sources,
            cameras: HashMap::new(),
            gnb: None,
            tracks: BTreeMap::new(),
            log: Vec::new(),
            faults: Vec::new(),
        }
    }

    pub fn decisions(&self) -> &[DecisionRecord] {
        &self.log
    }

    /// Internal errors that made the app hold, with the tick they occurred.
    pub fn faults(&self) -> &[(u64, XappError)] {
        &self.faults
    }

    pub fn track(&self, class: ObjectClass) -> Option<&TrackedEntity> {
        self.tracks.get(&class)
    }

    /// One control epoch: drain indications up to `now`, update tracks, and
    /// publish at most one POS control. Returns the published command.
    pub fn tick(&mut self, bus: &E2Bus, now: u64) -> Option<PosControl> {
        let inbox = match bus.poll(self.sub, now) {
            Ok(v) => v,
            Err(e) => {
                self.faults.push((now, XappError::Bus(e.to_string())));
                return None;
            }
        };
        self.ingest(&inbox, now);
        match self.decide(now) {
            Ok((sv, d)) => {
                let env = BusEnvelope {
                    sender: self.me.clone(),
                    kind: MessageKind::PosCtrl,
                    payload: d.control.encode(),
                    delivery_tick: now,
                };
                if let Err(e) = bus.publish(env) {
                    self.faults.push((now, XappError::Bus(e.to_string())));
                    return None;
                }
                let control = d.control;
                let t_s = tick_to_micros(now, self.cfg.fps) as f64 / 1e6;
                self.log.push(DecisionRecord { tick: now, t_s, state: sv, decision: d });
                Some(control)
            }
            Err(e) => {
                self.faults.push((now, e));
                None
            }
        }
    }

    fn ingest(&mut self, inbox: &[BusEnvelope], now: u64) {
        // Frame timestamp -> class -> (tick, estimates).
        let mut frames: BTreeMap<i64, (u64, BTreeMap<ObjectClass, Vec<Vec3>>)> = BTreeMap::new();
        for env in inbox {
            match env.kind {
                MessageKind::PosInd => match PosIndication::decode(&env.payload) {
                    Ok(ind) => self.absorb_pos(&env.sender, &ind, env.delivery_tick),
                    Err(e) => self.faults.push((now, e.into())),
                },
                MessageKind::VisInd => match VisIndication::decode(&env.payload) {
                    Ok(ind) => {
                        let frame = frames.entry(ind.tstamp).or_insert((env.delivery_tick, BTreeMap::new()));
                        if let Err(e) = self.estimate_frame(&env.sender, &ind, env.delivery_tick, &mut frame.1) {
                            self.faults.push((now, e));
                        }
                    }
                    Err(e) => self.faults.push((now, e.into())),
                },
                MessageKind::PosCtrl => {}
            }
        }
        let alpha = self.cfg.ema_alpha;
        for (tstamp, (tick, per_class)) in frames {
            for class in [ObjectClass::Person, ObjectClass::Obstacle] {
                let prev = self.tracks.get(&class).copied();
                let estimates = per_class.get(&class).map(Vec::as_slice).unwrap_or(&[]);
                let Ok(fused) = fuse(estimates, prev.map(|t| t.position)) else {
                    continue;
                };
                let id = prev.map_or(0, |t| t.id);
                let track = TrackedEntity::update(prev.as_ref(), id, fused, tstamp, tick, alpha);
                self.tracks.insert(class, track);
            }
        }
    }

    fn absorb_pos(&mut self, sender: &AgentId, ind: &PosIndication, tick: u64) {
        for e in &ind.pos_stats {
            if *sender == self.gnb_agent && e.id == self.gnb_id {
                self.gnb = Some(KnownPose { entry: *e, tick });
            } else if self.sources.iter().any(|s| s.agent == *sender && s.camera_id == e.id) {
                self.cameras.insert(e.id, KnownPose { entry: *e, tick });
            }
        }
    }

    fn estimate_frame(
        &mut self,
        sender: &AgentId,
        ind: &VisIndication,
        tick: u64,
        out: &mut BTreeMap<ObjectClass, Vec<Vec3>>,
    ) -> Result<(), XappError> {
        let Some(binding) = self.sources.iter().find(|s| s.agent == *sender) else {
            return Err(XappError::UnknownSource(sender.to_string()));
        };
        let cam = self.cameras.get(&binding.camera_id).ok_or(XappError::StaleCameraPose(binding.camera_id))?;
        if tick.saturating_sub(cam.tick) > self.cfg.stale_timeout_ticks {
            return Err(XappError::StaleCameraPose(binding.camera_id));
        }
        for det in &ind.vis_stats {
            let Some(class) = ObjectClass::from_code(det.cls) else {
                continue;
            };
            out.entry(class).or_default().push(estimate_position(&cam.entry, det));
        }
        Ok(())
    }

    fn decide(&mut self, now: u64) -> Result<(StateVector, Decision), XappError> {
        let gnb = self.gnb.ok_or(XappError::MissingTrack("gNB pose"))?.entry;
        let timeout = self.cfg.stale_timeout_ticks;
        let fresh = |t: &TrackedEntity| {
            let mut t = *t;
            if now.saturating_sub(t.last_seen_tick) > timeout {
                t.velocity = Vec2::default();
            }
            t
        };
        let ue = self.tracks.get(&ObjectClass::Person).map(fresh).ok_or(XappError::MissingTrack("UE"))?;
        let obs = self.tracks.get(&ObjectClass::Obstacle).map(fresh).ok_or(XappError::MissingTrack("obstacle"))?;
        let gnb_pos = Vec3::new(cm_to_meters(gnb.x), cm_to_meters(gnb.y), cm_to_meters(gnb.z));
        let los = infer_los(gnb_pos, ue.position, obs.position.xy(), &self.cfg.obstacle);
        let sv = build_state(&ue, &obs, gnb_pos, cm_to_meters(gnb.vx), los);
        let tstamp = tick_to_micros(now, self.cfg.fps);
        let d = decide_and_control(&sv, &self.cfg, self.policy.as_ref(), (gnb.y, gnb.z), tstamp)?;
        Ok((sv, d))
    }
}

/// Table of features from fused tracks and the gNB's reported pose.
pub fn build_state(
    ue: &TrackedEntity,
    obstacle: &TrackedEntity,
    gnb_position: Vec3,
    gnb_vx: f64,
    los: crate::twin::LosStatus,
) -> StateVector {
    StateVector {
        x_gnb: gnb_position.x,
        x_gnb_ue: ue.position.x - gnb_position.x,
        y_gnb_ue: ue.position.y - gnb_position.y,
        x_gnb_obs: obstacle.position.x - gnb_position.x,
        y_gnb_obs: obstacle.position.y - gnb_position.y,
        vx_gnb: gnb_vx,
        vx_ue: ue.velocity.x,
        vy_ue: ue.velocity.y,
        vx_obs: obstacle.velocity.x,
        vy_obs: obstacle.velocity.y,
        l_status: los,
    }
}
