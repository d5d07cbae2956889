//! Baseline agents and closed-loop episode execution.
//!
//! Stochastic policies are seeded; the per-episode stream is derived
//! from the policy seed and the episode id, so parallel and serial runs
//! of a split agree action-for-action.

use std::fmt;

use aeronav_core::kinematics::{
    apply_action, rollout, ActionKind, ActionSpace, KinematicsError, Pose, Rollout,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::episode::Episode;

/// How an agent picks its next action.
#[derive(Debug, Clone, PartialEq)]
pub enum AgentPolicy {
    /// Uniform over the vocabulary, stop included.
    RandomSampler { seed: u64 },
    /// Draws from a fixed action distribution (e.g. the training set's).
    ActionSampler {
        distribution: Vec<(ActionKind, f64)>,
        seed: u64,
    },
    /// Per-step greedy descent on distance-to-goal; stops inside the
    /// success radius. Ties break in vocabulary order.
    OracleGreedy,
}

impl AgentPolicy {
    pub fn name(&self) -> &'static str {
        match self {
            AgentPolicy::RandomSampler { .. } => "random",
            AgentPolicy::ActionSampler { .. } => "action",
            AgentPolicy::OracleGreedy => "oracle",
        }
    }

    fn base_seed(&self) -> u64 {
        match self {
            AgentPolicy::RandomSampler { seed } | AgentPolicy::ActionSampler { seed, .. } => *seed,
            AgentPolicy::OracleGreedy => 0,
        }
    }
}

/// Normalize a weighted action list into a sampling distribution.
pub fn normalize_distribution(
    weights: &[(ActionKind, f64)],
    space: &ActionSpace,
) -> Result<Vec<(ActionKind, f64)>, AgentError> {
    if weights.is_empty() {
        return Err(AgentError::BadDistribution {
            detail: String::from("empty distribution"),
        });
    }
    let mut total = 0.0;
    for (kind, w) in weights {
        if !space.contains(*kind) {
            return Err(AgentError::BadDistribution {
                detail: format!("action `{}` not in `{}`", kind.ident(), space.name),
            });
        }
        if !w.is_finite() || *w <= 0.0 {
            return Err(AgentError::BadDistribution {
                detail: format!("weight {w} for `{}`", kind.ident()),
            });
        }
        total += w;
    }
    Ok(weights.iter().map(|(k, w)| (*k, w / total)).collect())
}

/// Deterministic per-episode seed: FNV-1a over the id, mixed with the
/// policy seed. Stable across platforms and worker counts.
pub fn episode_seed(base: u64, episode_id: &str) -> u64 {
    let mut hash = 0xcbf29ce484222325u64;
    for byte in episode_id.as_bytes() {
        hash ^= u64::from(*byte);
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash ^ base
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentOptions {
    pub max_steps: usize,
    /// Radius at which the oracle decides to stop.
    pub success_radius: f64,
}

impl Default for AgentOptions {
    fn default() -> Self {
        Self {
            max_steps: crate::config::DEFAULT_MAX_STEPS,
            success_radius: crate::config::DEFAULT_SUCCESS_RADIUS,
        }
    }
}

/// An executed episode: the chosen actions and the resulting rollout.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentRun {
    pub actions: Vec<ActionKind>,
    pub rollout: Rollout,
}

#[derive(Debug)]
pub enum AgentError {
    UnknownSpace { name: String },
    BadDistribution { detail: String },
    Kinematics(KinematicsError),
}

impl fmt::Display for AgentError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AgentError::UnknownSpace { name } => write!(f, "unknown action space `{name}`"),
            AgentError::BadDistribution { detail } => write!(f, "bad distribution: {detail}"),
            AgentError::Kinematics(e) => e.fmt(f),
        }
    }
}

impl std::error::Error for AgentError {}

impl From<KinematicsError> for AgentError {
    fn from(e: KinematicsError) -> Self {
        AgentError::Kinematics(e)
    }
}

/// Draw one action from a normalized distribution by inverse transform.
pub fn sample_from(distribution: &[(ActionKind, f64)], rng: &mut ChaCha8Rng) -> ActionKind {
    let r: f64 = rng.gen();
    let mut acc = 0.0;
    for (kind, p) in distribution {
        acc += p;
        if r < acc {
            return *kind;
        }
    }
    distribution.last().expect("non-empty distribution").0
}

/// Run one policy on one episode until it stops or hits the step cap.
pub fn run_agent(
    episode: &Episode,
    policy: &AgentPolicy,
    opts: &AgentOptions,
) -> Result<AgentRun, AgentError> {
    let space = ActionSpace::by_name(&episode.action_space).ok_or(AgentError::UnknownSpace {
        name: episode.action_space.clone(),
    })?;
    let mut rng = ChaCha8Rng::seed_from_u64(episode_seed(policy.base_seed(), &episode.id));
    let normalized = match policy {
        AgentPolicy::ActionSampler { distribution, .. } => {
            Some(normalize_distribution(distribution, &space)?)
        }
        _ => None,
    };

    let mut actions = Vec::new();
    let mut pose = episode.start;
    for _ in 0..opts.max_steps {
        let kind = match policy {
            AgentPolicy::RandomSampler { .. } => {
                space.vocabulary[rng.gen_range(0..space.vocabulary.len())]
            }
            AgentPolicy::ActionSampler { .. } => {
                sample_from(normalized.as_deref().expect("validated above"), &mut rng)
            }
            AgentPolicy::OracleGreedy => greedy_step(&pose, episode, &space, opts.success_radius)?,
        };
        actions.push(kind);
        if kind == ActionKind::Stop {
            break;
        }
        pose = apply_action(&pose, kind, &space)?;
    }

    let out = rollout(&episode.start, &actions, &space, &episode.obstacles)?;
    Ok(AgentRun {
        actions,
        rollout: out,
    })
}

fn greedy_step(
    pose: &Pose,
    episode: &Episode,
    space: &ActionSpace,
    success_radius: f64,
) -> Result<ActionKind, AgentError> {
    if pose.position().distance(&episode.goal) <= success_radius {
        return Ok(ActionKind::Stop);
    }
    let mut best: Option<(ActionKind, f64)> = None;
    for &kind in &space.vocabulary {
        if kind == ActionKind::Stop {
            continue;
        }
        let next = apply_action(pose, kind, space)?;
        let d = next.position().distance(&episode.goal);
        if best.map(|(_, bd)| d < bd).unwrap_or(true) {
            best = Some((kind, d));
        }
    }
    Ok(best.expect("every space has motion actions").0)
}
