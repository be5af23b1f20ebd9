use std::path::Path;

use serde::{Deserialize, Serialize};

use super::network::QNetwork;
use super::DqnError;
use crate::xapp::{ControllerConfig, Normalization, QPolicy, StateVector, FEATURE_ORDER, STATE_DIM};

pub const POLICY_FORMAT: &str = "visionran-dqn-policy";
pub const POLICY_VERSION: u32 = 1;

/// A trained network plus everything needed to feed it at deployment.
#[derive(Debug, Clone, PartialEq)]
pub struct Policy {
    pub net: QNetwork,
    pub normalization: Normalization,
    pub delta: f64,
    pub v_max: f64,
    pub t_ctrl_s: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PolicyFile {
    format: String,
    version: u32,
    feature_order: Vec<String>,
    delta: f64,
    v_max: f64,
    t_ctrl_s: f64,
    normalization: Normalization,
    network: QNetwork,
}

impl Policy {
    pub fn new(net: QNetwork, normalization: Normalization, ctl: &crate::twin::ControlConfig) -> Result<Self, DqnError> {
        let p = Self { net, normalization, delta: ctl.delta, v_max: ctl.v_max, t_ctrl_s: ctl.t_ctrl_s };
        p.check()?;
        Ok(p)
    }

    fn check(&self) -> Result<(), DqnError> {
        self.net.check_shape().map_err(|e| DqnError::SchemaMismatch(e.to_string()))?;
        if self.net.input_dim() != STATE_DIM || self.net.output_dim() != 3 {
            return Err(DqnError::SchemaMismatch(format!(
                "network is {}→{}, expected {STATE_DIM}→3",
                self.net.input_dim(),
                self.net.output_dim()
            )));
        }
        self.normalization.validate().map_err(|e| DqnError::SchemaMismatch(e.to_string()))
    }

    /// Rejects a controller whose δ, v_max or T_ctrl differ from training.
    pub fn check_controller(&self, cfg: &ControllerConfig) -> Result<(), DqnError> {
        let same = self.delta == cfg.delta && self.v_max == cfg.v_max && self.t_ctrl_s == cfg.t_ctrl_s;
        if !same {
            return Err(DqnError::SchemaMismatch(format!(
                "policy trained with delta={} v_max={} T_ctrl={}, controller uses {} {} {}",
                self.delta, self.v_max, self.t_ctrl_s, cfg.delta, cfg.v_max, cfg.t_ctrl_s
            )));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let file = PolicyFile {
            format: POLICY_FORMAT.into(),
            version: POLICY_VERSION,
            feature_order: FEATURE_ORDER.iter().map(|s| s.to_string()).collect(),
            delta: self.delta,
            v_max: self.v_max,
            t_ctrl_s: self.t_ctrl_s,
            normalization: self.normalization.clone(),
            network: self.net.clone(),
        };
        serde_json::to_string(&file).expect("policy serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, DqnError> {
        let file: PolicyFile = serde_json::from_str(text).map_err(|e| match e.classify() {
            serde_json::error::Category::Data => DqnError::SchemaMismatch(e.to_string()),
            _ => DqnError::CorruptPolicy(e.to_string()),
        })?;
        if file.format != POLICY_FORMAT || file.version != POLICY_VERSION {
            return Err(DqnError::SchemaMismatch(format!("unsupported format {} v{}", file.format, file.version)));
        }
        if file.feature_order.iter().map(String::as_str).ne(FEATURE_ORDER) {
            return Err(DqnError::SchemaMismatch(format!("feature order {:?}", file.feature_order)));
        }
        let p = Self {
            net: file.network,
            normalization: file.normalization,
            delta: file.delta,
            v_max: file.v_max,
            t_ctrl_s: file.t_ctrl_s,
        };
        p.check()?;
        Ok(p)
    }

    pub fn save(&self, path: &Path) -> Result<(), DqnError> {
        std::fs::write(path, self.to_json()).map_err(|e| DqnError::Io(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, DqnError> {
        let text = std::fs::read_to_string(path).map_err(|e| DqnError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }
}

impl QPolicy for Policy {
    fn q_values(&self, sv: &StateVector) -> [f64; 3] {
        let q = self.net.forward(&self.normalization.apply(sv)).expect("shape checked on construction");
        [q[0], q[1], q[2]]
    }
}
