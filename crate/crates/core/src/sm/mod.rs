//! POS and VIS service models.
//!
//! Message structs mirror the E2 service-model tables field for field. All
//! quantities are integers in the units the tables prescribe (cm, cm/s,
//! rad × 100, µs). The wire encoding is canonical JSON: keys appear in
//! declaration order, there is no whitespace, and unknown keys are rejected
//! on decode.

mod bus;
mod codec;

pub use bus::{Ack, AgentId, BusEnvelope, BusError, E2Bus, MessageKind, SubscriberId};
pub use codec::{ServiceModelMessage, SmError};

use serde::{Deserialize, Serialize};

/// Largest |theta| allowed: π/2 in rad × 100, rounded.
pub const THETA_LIMIT: i32 = 158;
/// Largest |phi| allowed: π in rad × 100, rounded up.
pub const PHI_LIMIT: i32 = 315;

/// One network entity (gNB, camera, ...) in a POS indication.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PosDataEntry {
    pub id: i16,
    pub x: i32,
    pub y: i32,
    pub z: i32,
    pub vx: i32,
    pub vy: i32,
    pub vz: i32,
    /// Elevation, rad × 100.
    pub theta: i32,
    /// Azimuth, rad × 100.
    pub phi: i32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PosIndication {
    pub pos_stats: Vec<PosDataEntry>,
    pub len: u32,
    /// Report timestamp, µs.
    pub tstamp: i64,
}

impl PosIndication {
    pub fn new(pos_stats: Vec<PosDataEntry>, tstamp: i64) -> Self {
        let len = pos_stats.len() as u32;
        Self { pos_stats, len, tstamp }
    }
}

/// Target position for the mobile gNB.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PosControl {
    pub x: i32,
    pub y: i32,
    pub z: i32,
    pub tstamp: i64,
}

/// One object detection in a VIS indication.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VisDataEntry {
    pub id: i16,
    pub cls: i32,
    pub bbx: i32,
    pub bby: i32,
    pub bbw: i32,
    pub bbh: i32,
    pub theta: i32,
    pub phi: i32,
    /// Camera-to-object distance, cm.
    pub r: i32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VisIndication {
    pub vis_stats: Vec<VisDataEntry>,
    pub len: u32,
    pub tstamp: i64,
}

impl VisIndication {
    pub fn new(vis_stats: Vec<VisDataEntry>, tstamp: i64) -> Self {
        let len = vis_stats.len() as u32;
        Self { vis_stats, len, tstamp }
    }
}

/// Object class codes carried in [`VisDataEntry::cls`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ObjectClass {
    /// A person carrying the UE.
    Person,
    Obstacle,
}

impl ObjectClass {
    pub fn code(self) -> i32 {
        match self {
            ObjectClass::Person => 0,
            ObjectClass::Obstacle => 1,
        }
    }

    pub fn from_code(code: i32) -> Option<Self> {
        match code {
            0 => Some(ObjectClass::Person),
            1 => Some(ObjectClass::Obstacle),
            _ => None,
        }
    }
}
