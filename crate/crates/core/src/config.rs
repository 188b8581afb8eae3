use serde::{Deserialize, Serialize};

use crate::assessment::LevelThresholds;
use crate::learner::OverlayRule;
use crate::pedagogy::Thresholds;

/// Tunable constants of the engine. Every field has a default, so an empty
/// document deserializes to the stock configuration.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct EngineConfig {
    #[serde(flatten)]
    pub thresholds: Thresholds,
    pub levels: LevelThresholds,
    pub overlay: OverlayRule,
}

impl EngineConfig {
    pub fn validate(&self) -> Result<(), String> {
        let unit = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(format!("{name} = {v} is outside [0, 1]"))
            }
        };
        unit("mastery_bound", self.thresholds.mastery_bound)?;
        unit("readiness_bound", self.thresholds.readiness_bound)?;
        unit("levels.intermediate_from", self.levels.intermediate_from)?;
        unit("levels.expert_above", self.levels.expert_above)?;
        if self.levels.intermediate_from > self.levels.expert_above {
            return Err("levels.intermediate_from exceeds levels.expert_above".into());
        }
        if !self.overlay.is_valid() {
            return Err("overlay weights must be non-negative and sum to 1".into());
        }
        Ok(())
    }
}
