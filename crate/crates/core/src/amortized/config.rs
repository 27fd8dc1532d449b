use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How the feature subsets seen during joint training are generated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SubsetSource {
    /// Subsets are the groups chosen by the current policy earlier in the rollout.
    #[default]
    PolicyRollout,
    /// Every step starts from an independent draw of [`SubsetDistribution`].
    RandomUniform,
}

/// Validation loss watched by early stopping within one temperature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum StopMetric {
    /// Validation loss with Concrete samples at the current temperature.
    #[default]
    Relaxed,
    /// Validation loss of deterministic argmax rollouts.
    ZeroTemperature,
}

/// Every knob of the joint training loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub budget: usize,
    pub temperatures: Vec<f64>,
    pub patience: usize,
    pub max_epochs: usize,
    pub batch_size: usize,
    pub subset_source: SubsetSource,
    /// Upper bound on predictor pre-training epochs (early stopping applies).
    pub pretrain_epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub hidden: Vec<usize>,
    pub dropout: f64,
    /// One network with a policy head and a predictor head instead of two networks.
    pub share_backbone: bool,
    /// Checkpoint selection across temperatures always uses the zero-temperature loss.
    #[serde(default)]
    pub early_stopping: StopMetric,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            budget: 1,
            temperatures: vec![2.0, 1.0, 0.5, 0.2, 0.1],
            patience: 5,
            max_epochs: 100,
            batch_size: 128,
            subset_source: SubsetSource::PolicyRollout,
            pretrain_epochs: 100,
            learning_rate: 1e-3,
            seed: 0,
            hidden: vec![128, 128],
            dropout: 0.3,
            share_backbone: false,
            early_stopping: StopMetric::Relaxed,
        }
    }
}

impl TrainConfig {
    pub fn with_budget(budget: usize) -> Self {
        TrainConfig { budget, ..Self::default() }
    }

    pub fn validate(&self, groups: usize) -> Result<()> {
        if self.budget == 0 || self.budget >= groups {
            return Err(Error::Config(format!(
                "budget k = {} must satisfy 0 < k < g = {groups}",
                self.budget
            )));
        }
        if self.temperatures.is_empty() {
            return Err(Error::Config("temperature sequence is empty".into()));
        }
        if self.temperatures.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
            return Err(Error::Config("temperatures must be positive and finite".into()));
        }
        if self.temperatures.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::Config("temperatures must be strictly decreasing".into()));
        }
        for (name, v) in [
            ("patience", self.patience),
            ("max_epochs", self.max_epochs),
            ("batch_size", self.batch_size),
            ("pretrain_epochs", self.pretrain_epochs),
        ] {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!("learning rate {} must be positive", self.learning_rate)));
        }
        if self.hidden.contains(&0) {
            return Err(Error::Config("hidden widths must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Config(format!("dropout {} outside [0, 1)", self.dropout)));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        TrainConfig::with_budget(2).validate(3).unwrap();
    }

    #[test]
    fn budget_must_be_below_group_count() {
        let err = TrainConfig::with_budget(99).validate(5).unwrap_err();
        assert!(err.to_string().contains("0 < k < g"), "{err}");
        assert!(TrainConfig::with_budget(3).validate(3).is_err());
        assert!(TrainConfig::with_budget(0).validate(3).is_err());
    }

    #[test]
    fn temperatures_strictly_decreasing() {
        let mut c = TrainConfig::with_budget(1);
        c.temperatures = vec![1.0, 1.0];
        assert!(c.validate(3).is_err());
        c.temperatures = vec![1.0, 0.0];
        assert!(c.validate(3).is_err());
        c.temperatures = vec![];
        assert!(c.validate(3).is_err());
    }
}
