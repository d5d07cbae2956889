//! Resolved run configuration, echoed into every report for provenance.

use aeronav_core::preprocess::HistoryPolicy;
use serde::{Deserialize, Serialize};

pub const DEFAULT_MERGE_CAP: usize = 3;
pub const DEFAULT_HISTORY_BUDGET: usize = 8;
pub const DEFAULT_SUCCESS_RADIUS: f64 = 20.0;
pub const DEFAULT_DRIFT_THRESHOLD: f64 = 0.3;
pub const DEFAULT_LAMBDA_SP: f64 = 1.0;
pub const DEFAULT_LAMBDA_TR: f64 = 0.5;
pub const DEFAULT_MAX_STEPS: usize = 100;

/// Every knob a run can depend on, with the pipeline's standard values
/// as defaults. Serialized into report headers; re-running a header's
/// config reproduces its report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub action_space: String,
    pub merge_cap: usize,
    pub history_policy: String,
    pub history_budget: usize,
    pub success_radius: f64,
    pub drift_threshold: f64,
    pub lambda_sp: f64,
    pub lambda_tr: f64,
    pub seed: u64,
    pub max_steps: usize,
    /// Execution detail, not part of the reproducibility surface:
    /// reports are identical for any worker count, so it stays out of
    /// the serialized header.
    #[serde(skip)]
    pub workers: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub policy: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub input: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub output: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            action_space: String::from("aerial_vln"),
            merge_cap: DEFAULT_MERGE_CAP,
            history_policy: String::from("uniform"),
            history_budget: DEFAULT_HISTORY_BUDGET,
            success_radius: DEFAULT_SUCCESS_RADIUS,
            drift_threshold: DEFAULT_DRIFT_THRESHOLD,
            lambda_sp: DEFAULT_LAMBDA_SP,
            lambda_tr: DEFAULT_LAMBDA_TR,
            seed: 0,
            max_steps: DEFAULT_MAX_STEPS,
            workers: 1,
            policy: None,
            input: None,
            output: None,
        }
    }
}

impl RunConfig {
    /// The history policy named by `history_policy` / `history_budget`.
    pub fn history(&self) -> Option<HistoryPolicy> {
        match self.history_policy.as_str() {
            "current-only" | "current_only" => Some(HistoryPolicy::CurrentOnly),
            "fifo" => Some(HistoryPolicy::FifoBank {
                capacity: self.history_budget,
            }),
            "uniform" | "long_horizon_uniform" => Some(HistoryPolicy::LongHorizonUniform {
                budget: self.history_budget,
            }),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_pipeline_constants() {
        let cfg = RunConfig::default();
        assert_eq!(cfg.merge_cap, 3);
        assert_eq!(cfg.history_budget, 8);
        assert_eq!(cfg.success_radius, 20.0);
        assert_eq!(cfg.drift_threshold, 0.3);
        assert_eq!(cfg.lambda_sp, 1.0);
        assert_eq!(cfg.lambda_tr, 0.5);
        assert!(matches!(
            cfg.history(),
            Some(HistoryPolicy::LongHorizonUniform { budget: 8 })
        ));
    }

    #[test]
    fn history_names_resolve() {
        let with_policy = |name: &str| RunConfig {
            history_policy: String::from(name),
            ..RunConfig::default()
        };
        assert!(matches!(
            with_policy("current-only").history(),
            Some(HistoryPolicy::CurrentOnly)
        ));
        assert!(matches!(
            with_policy("fifo").history(),
            Some(HistoryPolicy::FifoBank { capacity: 8 })
        ));
        assert!(with_policy("attention").history().is_none());
    }
}
