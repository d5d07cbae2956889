//! Episode scoring: navigation error, success rates, DTW-based path
//! similarity, path-length efficiency, and failure classification.
//!
//! nDTW is `exp(-DTW / (|reference| * success_radius))`, tying the
//! normalization to the task's one distance threshold. SDTW weights nDTW
//! by per-episode success.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::kinematics::{Point3, Pose};
use crate::sum::compensated_sum;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

pub const DEFAULT_SUCCESS_RADIUS: f64 = 20.0;
pub const DEFAULT_DRIFT_THRESHOLD: f64 = 0.3;

/// Everything needed to score one episode.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalInput {
    pub predicted: Vec<Pose>,
    pub reference: Vec<Pose>,
    pub goal: Point3,
    /// Shortest feasible path length; straight-line start-to-goal
    /// distance when the dataset provides nothing better.
    pub shortest_length: f64,
    pub collided: bool,
    pub success_radius: f64,
    pub drift_threshold: f64,
}

impl EvalInput {
    pub fn new(predicted: Vec<Pose>, reference: Vec<Pose>, goal: Point3) -> Self {
        let shortest_length = reference
            .first()
            .map(|start| start.position().distance(&goal))
            .unwrap_or(0.0);
        Self {
            predicted,
            reference,
            goal,
            shortest_length,
            collided: false,
            success_radius: DEFAULT_SUCCESS_RADIUS,
            drift_threshold: DEFAULT_DRIFT_THRESHOLD,
        }
    }
}

/// Why an unsuccessful episode failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum FailureKind {
    /// Reached the goal region at some point but terminated elsewhere.
    StopFailure,
    /// Never reached the goal region and touched an obstacle.
    Collision,
    /// Never reached the goal region, with low path similarity.
    LongHorizonDrift,
    /// Remaining cases: partial alignment, incorrect grounding.
    PerceptionRelated,
}

impl FailureKind {
    pub fn label(&self) -> &'static str {
        match self {
            FailureKind::StopFailure => "stop_failure",
            FailureKind::Collision => "collision",
            FailureKind::LongHorizonDrift => "long_horizon_drift",
            FailureKind::PerceptionRelated => "perception_related",
        }
    }

    pub const ALL: [FailureKind; 4] = [
        FailureKind::StopFailure,
        FailureKind::Collision,
        FailureKind::LongHorizonDrift,
        FailureKind::PerceptionRelated,
    ];
}

impl fmt::Display for FailureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Per-episode metric values.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct EpisodeScore {
    /// Navigation error: final-position-to-goal distance, units.
    pub ne: f64,
    pub sr: bool,
    pub osr: bool,
    /// Normalized DTW path similarity in [0, 1].
    pub ndtw: f64,
    /// Success-weighted nDTW.
    pub sdtw: f64,
    /// Success weighted by shortest/executed path length ratio.
    pub spl: f64,
    /// Ground-truth action count; drives difficulty bucketing.
    pub action_count: usize,
    pub failure: Option<FailureKind>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum MetricsError {
    EmptyTrajectory { which: &'static str },
    EmptyEvaluation,
    InvalidInput { detail: String },
}

impl fmt::Display for MetricsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetricsError::EmptyTrajectory { which } => {
                write!(f, "{which} trajectory is empty")
            }
            MetricsError::EmptyEvaluation => f.write_str("no episodes to aggregate"),
            MetricsError::InvalidInput { detail } => write!(f, "invalid input: {detail}"),
        }
    }
}

impl core::error::Error for MetricsError {}

/// Euclidean distance from a final pose to the goal.
pub fn navigation_error(final_pose: &Pose, goal: &Point3) -> f64 {
    final_pose.position().distance(goal)
}

/// `(sr, osr)`: success at termination / at any trajectory point.
/// Distance equal to the radius counts as success.
pub fn success_flags(predicted: &[Pose], goal: &Point3, radius: f64) -> (bool, bool) {
    let sr = predicted
        .last()
        .map(|p| p.position().distance(goal) <= radius)
        .unwrap_or(false);
    let osr = predicted
        .iter()
        .any(|p| p.position().distance(goal) <= radius);
    (sr, osr)
}

/// Dynamic time warping distance between two paths with 3D Euclidean
/// point cost, symmetric match/insert/delete steps, anchored at both
/// ends. Returns the total accumulated cost of the best alignment.
pub fn dtw_distance(predicted: &[Pose], reference: &[Pose]) -> f64 {
    assert!(
        !predicted.is_empty() && !reference.is_empty(),
        "DTW needs non-empty paths"
    );
    let n = predicted.len();
    let m = reference.len();
    let mut prev = alloc::vec![f64::INFINITY; m + 1];
    let mut curr = alloc::vec![f64::INFINITY; m + 1];
    prev[0] = 0.0;
    for i in 1..=n {
        curr[0] = f64::INFINITY;
        let p = predicted[i - 1].position();
        for j in 1..=m {
            let cost = p.distance(&reference[j - 1].position());
            let best = prev[j].min(curr[j - 1]).min(prev[j - 1]);
            curr[j] = cost + best;
        }
        core::mem::swap(&mut prev, &mut curr);
    }
    prev[m]
}

/// Total length of a polyline through the poses' positions.
pub fn executed_path_length(path: &[Pose]) -> f64 {
    compensated_sum(
        path.windows(2)
            .map(|w| w[0].position().distance(&w[1].position())),
    )
}

/// Assign a failure category; call only for unsuccessful episodes.
/// Precedence: stop failure, then collision, then drift, then the
/// perception-related remainder.
pub fn classify_failure(
    osr: bool,
    collided: bool,
    ndtw: f64,
    drift_threshold: f64,
) -> FailureKind {
    if osr {
        FailureKind::StopFailure
    } else if collided {
        FailureKind::Collision
    } else if ndtw < drift_threshold {
        FailureKind::LongHorizonDrift
    } else {
        FailureKind::PerceptionRelated
    }
}

/// Score one episode across all metrics.
pub fn score_episode(input: &EvalInput) -> Result<EpisodeScore, MetricsError> {
    if input.predicted.is_empty() {
        return Err(MetricsError::EmptyTrajectory { which: "predicted" });
    }
    if input.reference.is_empty() {
        return Err(MetricsError::EmptyTrajectory { which: "reference" });
    }
    if !input.success_radius.is_finite() || input.success_radius <= 0.0 {
        return Err(MetricsError::InvalidInput {
            detail: alloc::format!("success radius {}", input.success_radius),
        });
    }
    if input.shortest_length < 0.0 {
        return Err(MetricsError::InvalidInput {
            detail: alloc::format!("shortest length {}", input.shortest_length),
        });
    }

    let final_pose = input.predicted.last().expect("non-empty");
    let ne = navigation_error(final_pose, &input.goal);
    let (sr, osr) = success_flags(&input.predicted, &input.goal, input.success_radius);

    let dtw = dtw_distance(&input.predicted, &input.reference);
    let ndtw = (-dtw / (input.reference.len() as f64 * input.success_radius)).exp();
    let sdtw = if sr { ndtw } else { 0.0 };

    let executed = executed_path_length(&input.predicted);
    let spl = if !sr {
        0.0
    } else if executed == 0.0 && input.shortest_length == 0.0 {
        1.0
    } else {
        input.shortest_length / executed.max(input.shortest_length)
    };

    let failure = if sr {
        None
    } else {
        Some(classify_failure(
            osr,
            input.collided,
            ndtw,
            input.drift_threshold,
        ))
    };

    Ok(EpisodeScore {
        ne,
        sr,
        osr,
        ndtw,
        sdtw,
        spl,
        action_count: input.reference.len() - 1,
        failure,
    })
}

/// Difficulty bucket by ground-truth action count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Difficulty {
    /// Fewer than 30 actions.
    Easy,
    /// 30 to 60 actions.
    Moderate,
    /// More than 60 actions.
    Hard,
}

impl Difficulty {
    pub fn of(action_count: usize) -> Self {
        if action_count < 30 {
            Difficulty::Easy
        } else if action_count <= 60 {
            Difficulty::Moderate
        } else {
            Difficulty::Hard
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Difficulty::Easy => "easy",
            Difficulty::Moderate => "moderate",
            Difficulty::Hard => "hard",
        }
    }

    pub const ALL: [Difficulty; 3] = [Difficulty::Easy, Difficulty::Moderate, Difficulty::Hard];
}

/// Count and success rate for one difficulty bucket.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct BucketSummary {
    pub episodes: usize,
    pub sr_pct: f64,
}

/// Split-level metric means. SR/OSR/SDTW/SPL are percentages; NE is in
/// units and nDTW stays a fraction in [0, 1].
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct AggregateScore {
    pub episodes: usize,
    pub ne: f64,
    pub sr_pct: f64,
    pub osr_pct: f64,
    pub ndtw_mean: f64,
    pub sdtw_pct: f64,
    pub spl_pct: f64,
    /// Failure counts in `FailureKind::ALL` order.
    pub failure_counts: [usize; 4],
    /// Buckets in `Difficulty::ALL` order.
    pub difficulty: [BucketSummary; 3],
}

/// Mean the per-episode scores in input order.
pub fn aggregate(scores: &[EpisodeScore]) -> Result<AggregateScore, MetricsError> {
    if scores.is_empty() {
        return Err(MetricsError::EmptyEvaluation);
    }
    let n = scores.len() as f64;
    let mean = |f: &dyn Fn(&EpisodeScore) -> f64| compensated_sum(scores.iter().map(f)) / n;

    let mut failure_counts = [0usize; 4];
    for s in scores {
        if let Some(kind) = s.failure {
            let idx = FailureKind::ALL.iter().position(|k| *k == kind).expect("known kind");
            failure_counts[idx] += 1;
        }
    }

    let mut difficulty = [BucketSummary { episodes: 0, sr_pct: 0.0 }; 3];
    for (slot, level) in difficulty.iter_mut().zip(Difficulty::ALL) {
        let bucket: Vec<&EpisodeScore> = scores
            .iter()
            .filter(|s| Difficulty::of(s.action_count) == level)
            .collect();
        if !bucket.is_empty() {
            let successes = bucket.iter().filter(|s| s.sr).count();
            *slot = BucketSummary {
                episodes: bucket.len(),
                sr_pct: 100.0 * successes as f64 / bucket.len() as f64,
            };
        }
    }

    Ok(AggregateScore {
        episodes: scores.len(),
        ne: mean(&|s| s.ne),
        sr_pct: 100.0 * mean(&|s| if s.sr { 1.0 } else { 0.0 }),
        osr_pct: 100.0 * mean(&|s| if s.osr { 1.0 } else { 0.0 }),
        ndtw_mean: mean(&|s| s.ndtw),
        sdtw_pct: 100.0 * mean(&|s| s.sdtw),
        spl_pct: 100.0 * mean(&|s| s.spl),
        failure_counts,
        difficulty,
    })
}
