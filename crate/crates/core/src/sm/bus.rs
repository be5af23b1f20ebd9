//! In-process stand-in for the E2 interface.
//!
//! Agents publish envelopes stamped with a virtual delivery tick; subscribers
//! poll for everything that has become visible. Poll order is fully
//! determined by `(delivery_tick, sender, send order)`, so a run replays
//! identically no matter how agents interleave their calls.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AgentId(pub String);

impl AgentId {
    pub fn new(name: impl Into<String>) -> Self {
        AgentId(name.into())
    }
}

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for AgentId {
    fn from(s: &str) -> Self {
        AgentId(s.to_owned())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MessageKind {
    #[serde(rename = "POS_IND")]
    PosInd,
    #[serde(rename = "VIS_IND")]
    VisInd,
    #[serde(rename = "POS_CTRL")]
    PosCtrl,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BusEnvelope {
    pub sender: AgentId,
    pub kind: MessageKind,
    pub payload: Vec<u8>,
    pub delivery_tick: u64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EnvelopeLine {
    sender: AgentId,
    kind: MessageKind,
    payload: String,
    delivery_tick: u64,
}

impl BusEnvelope {
    /// One newline-terminated JSON line, for loopback transports and logs.
    pub fn to_line(&self) -> Result<String, BusError> {
        let payload = String::from_utf8(self.payload.clone())
            .map_err(|_| BusError::BadLine("payload is not UTF-8".into()))?;
        let line = EnvelopeLine {
            sender: self.sender.clone(),
            kind: self.kind,
            payload,
            delivery_tick: self.delivery_tick,
        };
        let mut s = serde_json::to_string(&line).map_err(|e| BusError::BadLine(e.to_string()))?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_line(line: &str) -> Result<Self, BusError> {
        let l: EnvelopeLine =
            serde_json::from_str(line.trim_end()).map_err(|e| BusError::BadLine(e.to_string()))?;
        Ok(BusEnvelope {
            sender: l.sender,
            kind: l.kind,
            payload: l.payload.into_bytes(),
            delivery_tick: l.delivery_tick,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SubscriberId(usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Ack {
    /// Global send sequence number.
    pub seq: u64,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BusError {
    #[error("unknown subscriber {0:?}")]
    UnknownSubscriber(SubscriberId),
    #[error("delivery tick {delivery_tick} is before the current tick {now}")]
    LateDelivery { delivery_tick: u64, now: u64 },
    #[error("bad envelope line: {0}")]
    BadLine(String),
}

type OrderKey = (u64, AgentId, u64);

struct Subscription {
    kinds: Vec<MessageKind>,
    pending: BTreeMap<OrderKey, Arc<BusEnvelope>>,
}

#[derive(Default)]
struct Inner {
    now: u64,
    next_seq: u64,
    subs: Vec<Subscription>,
}

/// Shared message bus. All methods take `&self` and are safe to call from
/// several threads.
#[derive(Default)]
pub struct E2Bus {
    inner: Mutex<Inner>,
}

impl E2Bus {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers a subscriber for the given message kinds. Only envelopes
    /// published after this call are visible to it.
    pub fn subscribe(&self, kinds: &[MessageKind]) -> SubscriberId {
        let mut inner = self.lock();
        inner.subs.push(Subscription { kinds: kinds.to_vec(), pending: BTreeMap::new() });
        SubscriberId(inner.subs.len() - 1)
    }

    /// Moves the virtual clock forward. The clock never runs backwards.
    pub fn advance_to(&self, tick: u64) {
        let mut inner = self.lock();
        inner.now = inner.now.max(tick);
    }

    pub fn now(&self) -> u64 {
        self.lock().now
    }

    pub fn publish(&self, env: BusEnvelope) -> Result<Ack, BusError> {
        let mut inner = self.lock();
        if env.delivery_tick < inner.now {
            return Err(BusError::LateDelivery { delivery_tick: env.delivery_tick, now: inner.now });
        }
        let seq = inner.next_seq;
        inner.next_seq += 1;
        let key: OrderKey = (env.delivery_tick, env.sender.clone(), seq);
        let env = Arc::new(env);
        for sub in inner.subs.iter_mut().filter(|s| s.kinds.contains(&env.kind)) {
            sub.pending.insert(key.clone(), Arc::clone(&env));
        }
        Ok(Ack { seq })
    }

    /// Removes and returns every pending envelope with
    /// `delivery_tick <= up_to_tick`, in deterministic order.
    pub fn poll(&self, sub: SubscriberId, up_to_tick: u64) -> Result<Vec<BusEnvelope>, BusError> {
        let mut inner = self.lock();
        let s = inner.subs.get_mut(sub.0).ok_or(BusError::UnknownSubscriber(sub))?;
        let later = match up_to_tick.checked_add(1) {
            Some(bound) => s.pending.split_off(&(bound, AgentId(String::new()), 0)),
            None => BTreeMap::new(),
        };
        let ready = std::mem::replace(&mut s.pending, later);
        Ok(ready.into_values().map(|e| (*e).clone()).collect())
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, Inner> {
        // A poisoned lock only means another agent panicked mid-call; the
        // queue itself is still consistent.
        self.inner.lock().unwrap_or_else(|p| p.into_inner())
    }
}
