use serde::{Deserialize, Serialize};

use crate::error::ConfigError;

/// How the reference level for the score is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode", content = "value")]
pub enum AlphaMode {
    Fixed(f64),
    /// Median of every score observed so far, including the current one.
    RunningMedian,
}

/// How a factor is applied to an entry sharing several pairs with the
/// sampled combination.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpdatePolicy {
    /// Multiply once, however many pairs are shared.
    Once,
    /// Multiply once per shared pair (`factor ^ pairs`).
    PerPair,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchConfig {
    /// Iteration budget.
    pub k: u64,
    pub alpha_mode: AlphaMode,
    pub update_policy: UpdatePolicy,
    pub gamma_min: f64,
    pub gamma_max: f64,
    /// Fixed factor applied to pairs of a combination whose evaluation failed.
    pub failure_factor: f64,
    /// Entries whose mass drops below `exclusion_floor / total` are excluded.
    pub exclusion_floor: f64,
    pub cache_evaluations: bool,
    pub seed: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            k: 60,
            alpha_mode: AlphaMode::RunningMedian,
            update_policy: UpdatePolicy::PerPair,
            gamma_min: 0.1,
            gamma_max: 10.0,
            failure_factor: 0.25,
            exclusion_floor: 0.01,
            cache_evaluations: true,
            seed: 0,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.k < 1 {
            return Err(ConfigError::Iterations(self.k));
        }
        if let AlphaMode::Fixed(alpha) = self.alpha_mode {
            if !(alpha.is_finite() && alpha > 0.0) {
                return Err(ConfigError::Alpha(alpha));
            }
        }
        let (lo, hi) = (self.gamma_min, self.gamma_max);
        if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && lo <= 1.0 && hi >= 1.0) {
            return Err(ConfigError::Clamp(lo, hi));
        }
        let beta = self.failure_factor;
        if !(beta > 0.0 && beta < 1.0) {
            return Err(ConfigError::FailureFactor(beta));
        }
        let floor = self.exclusion_floor;
        if !(0.0..1.0).contains(&floor) {
            return Err(ConfigError::Floor(floor));
        }
        Ok(())
    }
}
