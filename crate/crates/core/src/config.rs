//! The TOML experiment-description format shared by the CLI commands.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::models::ArmModel;
use crate::policy::PolicySpec;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("config key `{key}`: {reason}")]
    Invalid { key: String, reason: String },
}

fn invalid(key: impl Into<String>, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key: key.into(),
        reason: reason.into(),
    }
}

/// A full experiment: truth models, policy, horizon, replications, seed, and
/// optional deviation-verifier cells.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub horizon: u64,
    pub replications: usize,
    /// Rounds at which statistics are recorded; defaults to `[horizon]`.
    #[serde(default)]
    pub checkpoints: Vec<u64>,
    pub policy: PolicySpec,
    pub arms: Vec<ArmModel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verify: Option<VerifyConfig>,
}

/// Cells for the Monte Carlo verification of the deviation bounds.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    pub trials: u64,
    #[serde(default)]
    pub lower: Vec<LowerCellConfig>,
    #[serde(default)]
    pub upper: Vec<UpperCellConfig>,
}

/// Lower-deviation cells: `P[D_inf(F_t, mu) <= D_inf(F, mu) - v]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LowerCellConfig {
    pub model: ArmModel,
    pub mu: f64,
    pub t: Vec<u64>,
    pub v: Vec<f64>,
}

/// Upper-deviation cells: `P[D_inf(F_t, mu) >= u  and  mean(F_t) <= mu]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UpperCellConfig {
    pub model: ArmModel,
    pub mu: f64,
    pub t: Vec<u64>,
    pub u: Vec<f64>,
}

impl ExperimentConfig {
    pub fn from_toml_str(s: &str) -> Result<Self, ConfigError> {
        let config: ExperimentConfig = toml::from_str(s)?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.arms.len() < 2 {
            return Err(invalid("arms", "need at least two arm models"));
        }
        for (i, arm) in self.arms.iter().enumerate() {
            arm.validate()
                .map_err(|e| invalid(format!("arms[{i}]"), e.to_string()))?;
        }
        if self.horizon < self.arms.len() as u64 {
            return Err(invalid(
                "horizon",
                format!(
                    "horizon {} is below the arm count {}",
                    self.horizon,
                    self.arms.len()
                ),
            ));
        }
        if self.replications < 1 {
            return Err(invalid("replications", "must be at least 1"));
        }
        let cps = &self.checkpoints;
        if !cps.windows(2).all(|w| w[0] < w[1]) {
            return Err(invalid("checkpoints", "must be strictly increasing"));
        }
        if let Some(&last) = cps.last() {
            if last > self.horizon {
                return Err(invalid(
                    "checkpoints",
                    format!("checkpoint {last} exceeds horizon {}", self.horizon),
                ));
            }
        }
        if let Some(&first) = cps.first() {
            if first == 0 {
                return Err(invalid("checkpoints", "checkpoints start at round 1"));
            }
        }
        match self.policy {
            PolicySpec::Dmed { r } => {
                if !(r > 0.0 && r < 1.0) {
                    return Err(invalid("policy.r", "must lie strictly inside (0, 1)"));
                }
            }
            PolicySpec::Egreedy { epsilon } => {
                if !(0.0..=1.0).contains(&epsilon) {
                    return Err(invalid("policy.epsilon", "must lie inside [0, 1]"));
                }
            }
            PolicySpec::Ucb1 => {}
        }
        if let Some(verify) = &self.verify {
            verify.validate()?;
        }
        Ok(())
    }

    /// Configured checkpoints, defaulting to the horizon alone.
    pub fn effective_checkpoints(&self) -> Vec<u64> {
        if self.checkpoints.is_empty() {
            vec![self.horizon]
        } else {
            self.checkpoints.clone()
        }
    }
}

/// Per-cell caps: empirical-dist sizes and trial batches stay desk-scale.
pub const MAX_CELL_T: u64 = 10_000;
pub const MAX_CELL_TRIALS: u64 = 1_000_000;

impl VerifyConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.trials < 1 {
            return Err(invalid("verify.trials", "must be at least 1"));
        }
        if self.trials > MAX_CELL_TRIALS {
            return Err(invalid(
                "verify.trials",
                format!("capped at {MAX_CELL_TRIALS} per cell"),
            ));
        }
        if self.lower.is_empty() && self.upper.is_empty() {
            return Err(invalid("verify", "needs at least one lower or upper cell"));
        }
        for (i, cell) in self.lower.iter().enumerate() {
            let key = format!("verify.lower[{i}]");
            cell.model
                .validate()
                .map_err(|e| invalid(format!("{key}.model"), e.to_string()))?;
            let mean = cell.model.mean();
            if !(cell.mu > mean && cell.mu < 1.0) {
                return Err(invalid(
                    format!("{key}.mu"),
                    format!("must lie in (mean, 1) = ({mean}, 1)"),
                ));
            }
            validate_ts(&key, &cell.t)?;
            if cell.v.iter().any(|&v| !(v > 0.0)) {
                return Err(invalid(format!("{key}.v"), "thresholds must be positive"));
            }
        }
        for (i, cell) in self.upper.iter().enumerate() {
            let key = format!("verify.upper[{i}]");
            cell.model
                .validate()
                .map_err(|e| invalid(format!("{key}.model"), e.to_string()))?;
            let mean = cell.model.mean();
            if !(cell.mu < mean) {
                return Err(invalid(
                    format!("{key}.mu"),
                    format!("must lie below the model mean {mean}"),
                ));
            }
            validate_ts(&key, &cell.t)?;
            if cell.u.iter().any(|&u| !(u > 0.0)) {
                return Err(invalid(format!("{key}.u"), "thresholds must be positive"));
            }
        }
        Ok(())
    }
}

fn validate_ts(key: &str, ts: &[u64]) -> Result<(), ConfigError> {
    if ts.is_empty() {
        return Err(invalid(format!("{key}.t"), "needs at least one sample size"));
    }
    if ts.iter().any(|&t| t == 0 || t > MAX_CELL_T) {
        return Err(invalid(
            format!("{key}.t"),
            format!("sample sizes must lie in 1..={MAX_CELL_T}"),
        ));
    }
    Ok(())
}
