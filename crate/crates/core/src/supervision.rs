//! Supervision weighting and multi-task loss aggregation.
//!
//! Action labels are reweighted by normalized inverse frequency:
//! `w(a) = sqrt((1/p(a)) / mean_b(1/p(b)))`, which makes the mean of
//! `w(a)^2` over the vocabulary exactly 1. The batch loss averages
//! per-sample cross-entropy scaled by `w(a)` for navigation samples and
//! by the fixed task weights for the auxiliary tasks.
//!
//! Tokens are plain strings so the same machinery serves raw and merged
//! action vocabularies (weights are normally computed over merged tokens,
//! which is what a trained policy actually predicts).

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::sum::compensated_sum;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

const PROB_SUM_TOL: f64 = 1e-9;
const ROW_SUM_TOL: f64 = 1e-6;

/// Empirical action probabilities over a token vocabulary.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct ActionDistribution {
    probs: BTreeMap<String, f64>,
}

impl ActionDistribution {
    /// Validate and wrap a probability table: every entry positive and
    /// finite, total within 1e-9 of 1.
    pub fn from_probs(probs: BTreeMap<String, f64>) -> Result<Self, SupervisionError> {
        if probs.is_empty() {
            return Err(SupervisionError::DegenerateDistribution {
                detail: String::from("empty vocabulary"),
            });
        }
        for (token, &p) in &probs {
            if !p.is_finite() || p <= 0.0 {
                return Err(SupervisionError::DegenerateDistribution {
                    detail: alloc::format!("p({token}) = {p}"),
                });
            }
        }
        let total = compensated_sum(probs.values().copied());
        if (total - 1.0).abs() > PROB_SUM_TOL {
            return Err(SupervisionError::DegenerateDistribution {
                detail: alloc::format!("probabilities sum to {total}"),
            });
        }
        Ok(Self { probs })
    }

    /// Normalize raw occurrence counts into a distribution.
    pub fn from_counts(counts: &BTreeMap<String, u64>) -> Result<Self, SupervisionError> {
        let total: u64 = counts.values().sum();
        if total == 0 {
            return Err(SupervisionError::DegenerateDistribution {
                detail: String::from("zero total count"),
            });
        }
        let probs = counts
            .iter()
            .filter(|(_, &c)| c > 0)
            .map(|(token, &c)| (token.clone(), c as f64 / total as f64))
            .collect();
        Self::from_probs(probs)
    }

    pub fn probs(&self) -> &BTreeMap<String, f64> {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

/// Per-token loss weights produced by [`compute_weights`].
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct WeightTable {
    weights: BTreeMap<String, f64>,
}

impl WeightTable {
    pub fn get(&self, token: &str) -> Option<f64> {
        self.weights.get(token).copied()
    }

    pub fn weights(&self) -> &BTreeMap<String, f64> {
        &self.weights
    }

    /// Mean of squared weights; 1 within float error for any valid table.
    pub fn mean_square(&self) -> f64 {
        compensated_sum(self.weights.values().map(|w| w * w)) / self.weights.len() as f64
    }
}

/// Which training task a sample belongs to.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub enum TaskKind {
    /// Next-action prediction; carries the (merged) action token.
    Navigation { action: String },
    SpatialPerception,
    TrajectoryReasoning,
}

/// One supervised sample: target token ids plus one predicted
/// probability row per target token.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainSample {
    pub task: TaskKind,
    pub target_tokens: Vec<usize>,
    pub predicted_rows: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SupervisionError {
    DegenerateDistribution { detail: String },
    UnknownAction { token: String },
    EmptyBatch,
    /// Zero predicted probability at a target index; never clamped.
    NumericalUnderflow { sample: usize, token_position: usize },
    MalformedSample { sample: usize, detail: String },
}

impl fmt::Display for SupervisionError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SupervisionError::DegenerateDistribution { detail } => {
                write!(f, "degenerate action distribution: {detail}")
            }
            SupervisionError::UnknownAction { token } => {
                write!(f, "action token `{token}` has no weight")
            }
            SupervisionError::EmptyBatch => f.write_str("loss over an empty batch"),
            SupervisionError::NumericalUnderflow { sample, token_position } => write!(
                f,
                "zero probability at target token {token_position} of sample {sample}"
            ),
            SupervisionError::MalformedSample { sample, detail } => {
                write!(f, "sample {sample}: {detail}")
            }
        }
    }
}

impl core::error::Error for SupervisionError {}

/// Normalized inverse-frequency weights:
/// `w(a) = sqrt((1/p(a)) / ((1/|A|) * sum_b 1/p(b)))`.
pub fn compute_weights(dist: &ActionDistribution) -> Result<WeightTable, SupervisionError> {
    let inverses: Vec<(&String, f64)> = dist
        .probs()
        .iter()
        .map(|(token, &p)| (token, 1.0 / p))
        .collect();
    let mean_inverse =
        compensated_sum(inverses.iter().map(|(_, inv)| *inv)) / inverses.len() as f64;
    let weights = inverses
        .into_iter()
        .map(|(token, inv)| (token.clone(), (inv / mean_inverse).sqrt()))
        .collect();
    Ok(WeightTable { weights })
}

/// Task-specific scale `W(u)`: the action weight for navigation samples,
/// `lambda_sp` / `lambda_tr` for the auxiliary tasks.
pub fn sample_weight(
    sample: &TrainSample,
    weights: &WeightTable,
    lambda_sp: f64,
    lambda_tr: f64,
) -> Result<f64, SupervisionError> {
    match &sample.task {
        TaskKind::Navigation { action } => {
            weights
                .get(action)
                .ok_or_else(|| SupervisionError::UnknownAction {
                    token: action.clone(),
                })
        }
        TaskKind::SpatialPerception => Ok(lambda_sp),
        TaskKind::TrajectoryReasoning => Ok(lambda_tr),
    }
}

/// Mean cross-entropy over a sample's target tokens:
/// `-(1/|y|) * sum_t ln z[t][y[t]]`.
fn sample_cross_entropy(sample: &TrainSample, index: usize) -> Result<f64, SupervisionError> {
    if sample.target_tokens.len() != sample.predicted_rows.len() {
        return Err(SupervisionError::MalformedSample {
            sample: index,
            detail: alloc::format!(
                "{} target tokens but {} predicted rows",
                sample.target_tokens.len(),
                sample.predicted_rows.len()
            ),
        });
    }
    if sample.target_tokens.is_empty() {
        return Err(SupervisionError::MalformedSample {
            sample: index,
            detail: String::from("no target tokens"),
        });
    }
    let mut log_terms = Vec::with_capacity(sample.target_tokens.len());
    for (t, (&target, row)) in sample
        .target_tokens
        .iter()
        .zip(&sample.predicted_rows)
        .enumerate()
    {
        if target >= row.len() {
            return Err(SupervisionError::MalformedSample {
                sample: index,
                detail: alloc::format!("target id {target} outside row of width {}", row.len()),
            });
        }
        if row.iter().any(|&p| p < 0.0 || !p.is_finite()) {
            return Err(SupervisionError::MalformedSample {
                sample: index,
                detail: alloc::format!("row {t} has negative or non-finite entries"),
            });
        }
        let row_sum = compensated_sum(row.iter().copied());
        if (row_sum - 1.0).abs() > ROW_SUM_TOL {
            return Err(SupervisionError::MalformedSample {
                sample: index,
                detail: alloc::format!("row {t} sums to {row_sum}"),
            });
        }
        let p = row[target];
        if p <= 0.0 {
            return Err(SupervisionError::NumericalUnderflow {
                sample: index,
                token_position: t,
            });
        }
        log_terms.push(p.ln());
    }
    Ok(-compensated_sum(log_terms.iter().copied()) / log_terms.len() as f64)
}

/// Weighted batch loss `(1/|B|) * sum_u W(u) * ce(u)`.
///
/// The final reduction sorts the per-sample terms into a canonical order
/// before compensated summation, so the result is bit-identical under
/// batch permutation and independent of how samples were sharded.
pub fn batch_loss(
    batch: &[TrainSample],
    weights: &WeightTable,
    lambda_sp: f64,
    lambda_tr: f64,
) -> Result<f64, SupervisionError> {
    if batch.is_empty() {
        return Err(SupervisionError::EmptyBatch);
    }
    let mut terms = Vec::with_capacity(batch.len());
    for (i, sample) in batch.iter().enumerate() {
        let w = sample_weight(sample, weights, lambda_sp, lambda_tr)?;
        let ce = sample_cross_entropy(sample, i)?;
        terms.push(w * ce);
    }
    terms.sort_unstable_by(f64::total_cmp);
    Ok(compensated_sum(terms.iter().copied()) / batch.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dist(pairs: &[(&str, f64)]) -> ActionDistribution {
        let probs = pairs
            .iter()
            .map(|(t, p)| (String::from(*t), *p))
            .collect();
        ActionDistribution::from_probs(probs).unwrap()
    }

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    #[test]
    fn uniform_distribution_gives_unit_weights() {
        let d = dist(&[("a", 0.25), ("b", 0.25), ("c", 0.25), ("d", 0.25)]);
        let table = compute_weights(&d).unwrap();
        for &w in table.weights().values() {
            assert_close(w, 1.0, 1e-12);
        }
    }

    #[test]
    fn two_action_weights_match_arithmetic_oracle() {
        // 1/p = (1.25, 5); mean 3.125; w = sqrt((1.25, 5) / 3.125).
        let d = dist(&[("frequent", 0.8), ("rare", 0.2)]);
        let table = compute_weights(&d).unwrap();
        assert_close(table.get("frequent").unwrap(), 0.63246, 1e-5);
        assert_close(table.get("rare").unwrap(), 1.26491, 1e-5);
        assert_close(table.mean_square(), 1.0, 1e-12);
    }

    #[test]
    fn three_action_weights_match_arithmetic_oracle() {
        let d = dist(&[("a", 0.5), ("b", 0.25), ("c", 0.25)]);
        let table = compute_weights(&d).unwrap();
        assert_close(table.get("a").unwrap(), 0.77460, 1e-5);
        assert_close(table.get("b").unwrap(), 1.09545, 1e-5);
        assert_close(table.get("c").unwrap(), 1.09545, 1e-5);
    }

    #[test]
    fn rarer_actions_weigh_more() {
        let d = dist(&[("a", 0.7), ("b", 0.2), ("c", 0.1)]);
        let table = compute_weights(&d).unwrap();
        assert!(table.get("c").unwrap() > table.get("b").unwrap());
        assert!(table.get("b").unwrap() > table.get("a").unwrap());
    }

    #[test]
    fn invalid_probabilities_rejected() {
        let mut probs = BTreeMap::new();
        probs.insert(String::from("a"), 0.5);
        probs.insert(String::from("b"), 0.0);
        probs.insert(String::from("c"), 0.5);
        assert!(matches!(
            ActionDistribution::from_probs(probs),
            Err(SupervisionError::DegenerateDistribution { .. })
        ));
        let mut short = BTreeMap::new();
        short.insert(String::from("a"), 0.5);
        assert!(ActionDistribution::from_probs(short).is_err());
    }

    #[test]
    fn counts_normalize() {
        let mut counts = BTreeMap::new();
        counts.insert(String::from("a"), 80u64);
        counts.insert(String::from("b"), 20u64);
        let d = ActionDistribution::from_counts(&counts).unwrap();
        assert_close(d.probs()["a"], 0.8, 1e-15);
        assert_close(d.probs()["b"], 0.2, 1e-15);
    }

    fn nav_sample(action: &str, rows: Vec<Vec<f64>>, targets: Vec<usize>) -> TrainSample {
        TrainSample {
            task: TaskKind::Navigation {
                action: String::from(action),
            },
            target_tokens: targets,
            predicted_rows: rows,
        }
    }

    /// A single-token sample whose cross-entropy is exactly `ce`.
    fn sample_with_ce(task: TaskKind, ce: f64) -> TrainSample {
        let p = (-ce).exp();
        TrainSample {
            task,
            target_tokens: alloc::vec![0],
            predicted_rows: alloc::vec![alloc::vec![p, 1.0 - p]],
        }
    }

    #[test]
    fn task_weights_follow_case_analysis() {
        let d = dist(&[("frequent", 0.8), ("rare", 0.2)]);
        let table = compute_weights(&d).unwrap();
        let sp = sample_with_ce(TaskKind::SpatialPerception, 1.0);
        let tr = sample_with_ce(TaskKind::TrajectoryReasoning, 1.0);
        assert_eq!(sample_weight(&sp, &table, 1.0, 0.5).unwrap(), 1.0);
        assert_eq!(sample_weight(&tr, &table, 1.0, 0.5).unwrap(), 0.5);
        let nav = nav_sample("frequent", alloc::vec![alloc::vec![1.0]], alloc::vec![0]);
        assert_close(sample_weight(&nav, &table, 1.0, 0.5).unwrap(), 0.63246, 1e-5);
        let unknown = nav_sample("hover", alloc::vec![alloc::vec![1.0]], alloc::vec![0]);
        assert!(matches!(
            sample_weight(&unknown, &table, 1.0, 0.5),
            Err(SupervisionError::UnknownAction { .. })
        ));
    }

    #[test]
    fn perfect_predictions_score_zero() {
        let d = dist(&[("a", 0.5), ("b", 0.5)]);
        let table = compute_weights(&d).unwrap();
        let sample = nav_sample(
            "a",
            alloc::vec![alloc::vec![1.0, 0.0], alloc::vec![0.0, 1.0]],
            alloc::vec![0, 1],
        );
        assert_eq!(batch_loss(&[sample], &table, 1.0, 0.5).unwrap(), 0.0);
    }

    #[test]
    fn worked_two_sample_batch() {
        let d = dist(&[("frequent", 0.8), ("rare", 0.2)]);
        let table = compute_weights(&d).unwrap();
        let nav = sample_with_ce(
            TaskKind::Navigation {
                action: String::from("rare"),
            },
            2.0,
        );
        let tr = sample_with_ce(TaskKind::TrajectoryReasoning, 1.0);
        let loss = batch_loss(&[nav, tr], &table, 1.0, 0.5).unwrap();
        assert_close(loss, 1.51491, 1e-5);
    }

    #[test]
    fn uniform_rows_score_ln_vocab() {
        let d = dist(&[("a", 0.5), ("b", 0.5)]);
        let table = compute_weights(&d).unwrap();
        for vocab in [2usize, 7, 64] {
            let row = alloc::vec![1.0 / vocab as f64; vocab];
            let sample = nav_sample("a", alloc::vec![row.clone(), row], alloc::vec![0, vocab - 1]);
            let loss = batch_loss(&[sample], &table, 1.0, 0.5).unwrap();
            assert_close(loss, (vocab as f64).ln(), 1e-9);
        }
    }

    #[test]
    fn zero_target_probability_is_underflow() {
        let d = dist(&[("a", 0.5), ("b", 0.5)]);
        let table = compute_weights(&d).unwrap();
        let sample = nav_sample("a", alloc::vec![alloc::vec![0.0, 1.0]], alloc::vec![0]);
        assert!(matches!(
            batch_loss(&[sample], &table, 1.0, 0.5),
            Err(SupervisionError::NumericalUnderflow { sample: 0, token_position: 0 })
        ));
    }

    #[test]
    fn empty_batch_rejected() {
        let d = dist(&[("a", 0.5), ("b", 0.5)]);
        let table = compute_weights(&d).unwrap();
        assert_eq!(
            batch_loss(&[], &table, 1.0, 0.5),
            Err(SupervisionError::EmptyBatch)
        );
    }

    #[test]
    fn malformed_rows_rejected() {
        let d = dist(&[("a", 0.5), ("b", 0.5)]);
        let table = compute_weights(&d).unwrap();
        let bad_sum = nav_sample("a", alloc::vec![alloc::vec![0.9, 0.3]], alloc::vec![0]);
        assert!(matches!(
            batch_loss(&[bad_sum], &table, 1.0, 0.5),
            Err(SupervisionError::MalformedSample { .. })
        ));
        let bad_target = nav_sample("a", alloc::vec![alloc::vec![0.5, 0.5]], alloc::vec![2]);
        assert!(matches!(
            batch_loss(&[bad_target], &table, 1.0, 0.5),
            Err(SupervisionError::MalformedSample { .. })
        ));
    }

    #[test]
    fn loss_is_linear_in_per_sample_ce() {
        let d = dist(&[("a", 0.5), ("b", 0.5)]);
        let table = compute_weights(&d).unwrap();
        let batch1 = alloc::vec![
            sample_with_ce(TaskKind::SpatialPerception, 0.7),
            sample_with_ce(TaskKind::TrajectoryReasoning, 1.3),
        ];
        let batch2 = alloc::vec![
            sample_with_ce(TaskKind::SpatialPerception, 1.4),
            sample_with_ce(TaskKind::TrajectoryReasoning, 2.6),
        ];
        let l1 = batch_loss(&batch1, &table, 1.0, 0.5).unwrap();
        let l2 = batch_loss(&batch2, &table, 1.0, 0.5).unwrap();
        assert_close(l2, 2.0 * l1, 1e-9);
    }

    #[test]
    fn permuting_batch_is_bit_identical() {
        let d = dist(&[("a", 0.5), ("b", 0.5)]);
        let table = compute_weights(&d).unwrap();
        let a = sample_with_ce(TaskKind::SpatialPerception, 0.31);
        let b = sample_with_ce(TaskKind::TrajectoryReasoning, 2.17);
        let c = sample_with_ce(
            TaskKind::Navigation {
                action: String::from("a"),
            },
            0.93,
        );
        let fwd = batch_loss(&[a.clone(), b.clone(), c.clone()], &table, 1.0, 0.5).unwrap();
        let rev = batch_loss(&[c, b, a], &table, 1.0, 0.5).unwrap();
        assert_eq!(fwd.to_bits(), rev.to_bits());
    }
}
