use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;

use super::{
    PosControl, PosDataEntry, PosIndication, VisDataEntry, VisIndication, PHI_LIMIT, THETA_LIMIT,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SmError {
    #[error("malformed message: {0}")]
    MalformedMessage(String),
    #[error("schema violation: {0}")]
    SchemaViolation(String),
    #[error("length mismatch: len={declared} but {actual} entries present")]
    LengthMismatch { declared: u32, actual: usize },
}

/// Canonical JSON encoding shared by every service-model message.
pub trait ServiceModelMessage: Serialize + DeserializeOwned {
    /// Checks value-level invariants that the type system cannot express.
    fn validate(&self) -> Result<(), SmError>;

    fn encode(&self) -> Vec<u8> {
        // Struct serialization into a Vec cannot fail.
        serde_json::to_vec(self).expect("service-model messages always serialize")
    }

    fn decode(bytes: &[u8]) -> Result<Self, SmError> {
        let msg: Self = serde_json::from_slice(bytes).map_err(classify)?;
        msg.validate()?;
        Ok(msg)
    }
}

fn classify(err: serde_json::Error) -> SmError {
    use serde_json::error::Category;
    match err.classify() {
        Category::Data => SmError::SchemaViolation(err.to_string()),
        Category::Syntax | Category::Eof | Category::Io => {
            SmError::MalformedMessage(err.to_string())
        }
    }
}

fn check_angles(theta: i32, phi: i32) -> Result<(), SmError> {
    if theta.abs() > THETA_LIMIT {
        return Err(SmError::SchemaViolation(format!("theta {theta} outside ±{THETA_LIMIT}")));
    }
    if phi.abs() > PHI_LIMIT {
        return Err(SmError::SchemaViolation(format!("phi {phi} outside ±{PHI_LIMIT}")));
    }
    Ok(())
}

fn check_len(declared: u32, actual: usize) -> Result<(), SmError> {
    if declared as usize != actual {
        return Err(SmError::LengthMismatch { declared, actual });
    }
    Ok(())
}

impl ServiceModelMessage for PosDataEntry {
    fn validate(&self) -> Result<(), SmError> {
        check_angles(self.theta, self.phi)
    }
}

impl ServiceModelMessage for PosIndication {
    fn validate(&self) -> Result<(), SmError> {
        self.pos_stats.iter().try_for_each(|e| e.validate())?;
        check_len(self.len, self.pos_stats.len())
    }
}

impl ServiceModelMessage for PosControl {
    fn validate(&self) -> Result<(), SmError> {
        Ok(())
    }
}

impl ServiceModelMessage for VisDataEntry {
    fn validate(&self) -> Result<(), SmError> {
        if self.r < 0 {
            return Err(SmError::SchemaViolation(format!("negative distance r={}", self.r)));
        }
        if self.bbw <= 0 || self.bbh <= 0 {
            return Err(SmError::SchemaViolation(format!(
                "empty bounding box {}x{}",
                self.bbw, self.bbh
            )));
        }
        check_angles(self.theta, self.phi)
    }
}

impl ServiceModelMessage for VisIndication {
    fn validate(&self) -> Result<(), SmError> {
        self.vis_stats.iter().try_for_each(|e| e.validate())?;
        check_len(self.len, self.vis_stats.len())
    }
}
