//! Split-level operations: the closed-loop evaluation runner, merge
//! statistics, and the synthetic episode generator.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use aeronav_core::kinematics::{
    rollout, ActionKind, ActionSpace, ObstacleBox, Point3, Pose,
};
use aeronav_core::metrics::{aggregate, score_episode, AggregateScore, EpisodeScore, EvalInput};
use aeronav_core::preprocess::{merge_actions, merged_token};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::agent::{run_agent, AgentError, AgentOptions, AgentPolicy};
use crate::config::RunConfig;
use crate::episode::Episode;

/// Per-episode evaluation record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub id: String,
    pub ne: f64,
    pub sr: bool,
    pub osr: bool,
    pub ndtw: f64,
    pub sdtw: f64,
    pub spl: f64,
    pub collided: bool,
    pub action_count: usize,
    pub steps_taken: usize,
    pub failure: Option<aeronav_core::metrics::FailureKind>,
}

impl EpisodeResult {
    pub fn score(&self) -> EpisodeScore {
        EpisodeScore {
            ne: self.ne,
            sr: self.sr,
            osr: self.osr,
            ndtw: self.ndtw,
            sdtw: self.sdtw,
            spl: self.spl,
            action_count: self.action_count,
            failure: self.failure,
        }
    }
}

/// Evaluation output: per-episode records in input order, the
/// aggregate, and any per-episode diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub config: RunConfig,
    pub episodes: Vec<EpisodeResult>,
    pub aggregate: Option<AggregateScore>,
    pub diagnostics: Vec<String>,
    pub notes: Vec<String>,
}

#[derive(Debug)]
pub enum RunnerError {
    EmptySplit,
    Agent(AgentError),
}

impl fmt::Display for RunnerError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunnerError::EmptySplit => f.write_str("no episodes to process"),
            RunnerError::Agent(e) => e.fmt(f),
        }
    }
}

impl std::error::Error for RunnerError {}

fn report_notes() -> Vec<String> {
    vec![
        String::from("spl uses straight-line start-to-goal distance as the shortest path length"),
        String::from("sdtw weights ndtw by per-episode success, not split-level success"),
    ]
}

fn eval_one(
    episode: &Episode,
    policy: &AgentPolicy,
    config: &RunConfig,
) -> Result<EpisodeResult, String> {
    let space = ActionSpace::by_name(&episode.action_space)
        .ok_or_else(|| format!("episode `{}`: unknown action space", episode.id))?;
    let reference = rollout(&episode.start, &episode.gt_actions, &space, &[])
        .map_err(|e| format!("episode `{}`: {e}", episode.id))?;
    let opts = AgentOptions {
        max_steps: config.max_steps,
        success_radius: config.success_radius,
    };
    let run = run_agent(episode, policy, &opts).map_err(|e| format!("episode `{}`: {e}", episode.id))?;

    let input = EvalInput {
        predicted: run.rollout.trajectory,
        reference: reference.trajectory,
        goal: episode.goal,
        shortest_length: episode.start.position().distance(&episode.goal),
        collided: run.rollout.collided,
        success_radius: config.success_radius,
        drift_threshold: config.drift_threshold,
    };
    let score = score_episode(&input).map_err(|e| format!("episode `{}`: {e}", episode.id))?;
    Ok(EpisodeResult {
        id: episode.id.clone(),
        ne: score.ne,
        sr: score.sr,
        osr: score.osr,
        ndtw: score.ndtw,
        sdtw: score.sdtw,
        spl: score.spl,
        collided: input.collided,
        action_count: score.action_count,
        steps_taken: run.actions.len(),
        failure: score.failure,
    })
}

/// Map items to results on `workers` threads, collecting in input
/// order; any worker count yields the same output.
pub fn parallel_ordered_map<T, R, F>(items: &[T], workers: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync,
{
    let workers = workers.max(1).min(items.len().max(1));
    let slots: Vec<Mutex<Option<R>>> = items.iter().map(|_| Mutex::new(None)).collect();
    let cursor = AtomicUsize::new(0);
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let index = cursor.fetch_add(1, Ordering::Relaxed);
                if index >= items.len() {
                    break;
                }
                *slots[index].lock().expect("result slot") = Some(f(&items[index]));
            });
        }
    });
    slots
        .into_iter()
        .map(|slot| {
            slot.into_inner()
                .expect("result slot")
                .expect("all slots filled")
        })
        .collect()
}

/// Evaluate a policy over a split. Episodes shard across
/// `config.workers` threads; records keep input order, so the report is
/// identical for any worker count.
pub fn evaluate_split(
    episodes: &[Episode],
    policy: &AgentPolicy,
    config: &RunConfig,
) -> Result<EvalReport, RunnerError> {
    if episodes.is_empty() {
        return Err(RunnerError::EmptySplit);
    }
    let outcomes = parallel_ordered_map(episodes, config.workers, |episode| {
        eval_one(episode, policy, config)
    });

    let mut results = Vec::with_capacity(episodes.len());
    let mut diagnostics = Vec::new();
    for outcome in outcomes {
        match outcome {
            Ok(record) => results.push(record),
            Err(message) => diagnostics.push(message),
        }
    }

    let scores: Vec<EpisodeScore> = results.iter().map(EpisodeResult::score).collect();
    let aggregate = aggregate(&scores).ok();
    Ok(EvalReport {
        config: config.clone(),
        episodes: results,
        aggregate,
        diagnostics,
        notes: report_notes(),
    })
}

/// Distribution summary of sequence lengths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceStats {
    pub min_len: usize,
    pub mean_len: f64,
    pub max_len: usize,
    pub total_items: usize,
}

impl SequenceStats {
    fn over(lengths: &[usize]) -> Self {
        let total: usize = lengths.iter().sum();
        Self {
            min_len: lengths.iter().copied().min().unwrap_or(0),
            mean_len: if lengths.is_empty() {
                0.0
            } else {
                total as f64 / lengths.len() as f64
            },
            max_len: lengths.iter().copied().max().unwrap_or(0),
            total_items: total,
        }
    }
}

/// Before/after picture of what merging does to a split: shorter
/// sequences over a richer token vocabulary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub episodes: usize,
    pub merge_cap: usize,
    pub before: SequenceStats,
    pub after: SequenceStats,
    /// Primitive action counts before merging.
    pub action_histogram: BTreeMap<String, u64>,
    /// Merged token counts after merging; the vocabulary the weight
    /// table is usually computed over.
    pub token_histogram: BTreeMap<String, u64>,
    /// Distinct primitive actions observed.
    pub vocabulary_before: usize,
    /// Distinct merged tokens observed.
    pub vocabulary_after: usize,
    pub max_run_before: usize,
    pub max_run_after: usize,
}

fn longest_run(actions: &[ActionKind]) -> usize {
    let mut best = 0;
    let mut current = 0;
    let mut last = None;
    for &a in actions {
        if Some(a) == last {
            current += 1;
        } else {
            current = 1;
            last = Some(a);
        }
        best = best.max(current);
    }
    best
}

/// Action-count histograms and sequence-length distributions before and
/// after merging.
pub fn preprocess_stats(episodes: &[Episode], merge_cap: usize) -> StatsReport {
    let mut action_histogram = BTreeMap::new();
    let mut token_histogram = BTreeMap::new();
    let mut before_lens = Vec::with_capacity(episodes.len());
    let mut after_lens = Vec::with_capacity(episodes.len());
    let mut max_run_before = 0;
    let mut max_run_after = 0;

    for episode in episodes {
        before_lens.push(episode.gt_actions.len());
        max_run_before = max_run_before.max(longest_run(&episode.gt_actions));
        for kind in &episode.gt_actions {
            *action_histogram.entry(kind.ident().to_string()).or_insert(0) += 1;
        }
        let segments = merge_actions(&episode.gt_actions, merge_cap);
        after_lens.push(segments.len());
        max_run_after = max_run_after.max(segments.iter().map(|s| s.count).max().unwrap_or(0));
        for seg in &segments {
            *token_histogram.entry(merged_token(seg.kind, seg.count)).or_insert(0) += 1;
        }
    }

    StatsReport {
        episodes: episodes.len(),
        merge_cap,
        before: SequenceStats::over(&before_lens),
        after: SequenceStats::over(&after_lens),
        vocabulary_before: action_histogram.len(),
        vocabulary_after: token_histogram.len(),
        action_histogram,
        token_histogram,
        max_run_before,
        max_run_after,
    }
}

/// Knobs for the synthetic split generator.
#[derive(Debug, Clone, PartialEq)]
pub struct GeometryOptions {
    pub min_actions: usize,
    pub max_actions: usize,
    /// Regenerated routes must displace at least this far from the start.
    pub min_goal_distance: f64,
    pub with_obstacles: bool,
    pub obstacles_per_episode: usize,
    /// Half-extent of the square start-position spread.
    pub arena_half_extent: f64,
    pub min_altitude: f64,
    pub max_altitude: f64,
}

impl Default for GeometryOptions {
    fn default() -> Self {
        Self {
            min_actions: 8,
            max_actions: 60,
            min_goal_distance: 0.0,
            with_obstacles: false,
            obstacles_per_episode: 3,
            arena_half_extent: 200.0,
            min_altitude: 20.0,
            max_altitude: 60.0,
        }
    }
}

/// Deterministically generate reachable episodes: the goal is the
/// endpoint of the ground-truth route, and any obstacles are rejection
/// sampled off the reference path.
pub fn generate_synthetic_split(
    count: usize,
    space: &ActionSpace,
    seed: u64,
    options: &GeometryOptions,
) -> Vec<Episode> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut episodes = Vec::with_capacity(count);
    for index in 0..count {
        episodes.push(generate_episode(index, space, seed, options, &mut rng));
    }
    episodes
}

fn generate_episode(
    index: usize,
    space: &ActionSpace,
    seed: u64,
    options: &GeometryOptions,
    rng: &mut ChaCha8Rng,
) -> Episode {
    let turn_slots = (360.0 / space.turn_step) as u32;
    let start = Pose::new(
        rng.gen_range(-options.arena_half_extent..options.arena_half_extent),
        rng.gen_range(-options.arena_half_extent..options.arena_half_extent),
        rng.gen_range(options.min_altitude..options.max_altitude),
        rng.gen_range(0..turn_slots) as f64 * space.turn_step,
    );

    let length = rng.gen_range(options.min_actions..=options.max_actions.max(options.min_actions));
    let mut actions = random_route(space, length, rng);
    let mut end = rollout(&start, &actions, space, &[])
        .expect("generated actions are in vocabulary")
        .trajectory
        .into_iter()
        .last()
        .expect("rollout keeps the start");
    // Extend straight ahead until the displacement floor is met; a
    // fixed-heading ray leaves any sphere around the start eventually.
    while start.position().distance(&end.position()) < options.min_goal_distance {
        actions.push(ActionKind::MoveForward);
        end = aeronav_core::kinematics::apply_action(&end, ActionKind::MoveForward, space)
            .expect("move forward is always in vocabulary");
    }
    let goal = end.position();

    let reference = rollout(&start, &actions, space, &[])
        .expect("generated actions are in vocabulary")
        .trajectory;
    let obstacles = if options.with_obstacles {
        sample_obstacles(&reference, options.obstacles_per_episode, rng)
    } else {
        Vec::new()
    };

    let instruction = describe_route(&actions, space);
    Episode {
        schema_version: crate::episode::SCHEMA_VERSION,
        id: format!("syn-{seed:08x}-{index:05}"),
        action_space: space.name.clone(),
        instruction,
        start,
        gt_actions: actions,
        goal,
        obstacles,
        frames: None,
        extra: serde_json::Map::new(),
    }
}

fn random_route(space: &ActionSpace, length: usize, rng: &mut ChaCha8Rng) -> Vec<ActionKind> {
    // Forward-heavy mixture: long trajectories are dominated by forward
    // micro-steps with occasional turns and altitude changes.
    let mut weighted: Vec<(ActionKind, f64)> = vec![(ActionKind::MoveForward, 0.55)];
    for kind in [
        ActionKind::TurnLeft,
        ActionKind::TurnRight,
        ActionKind::Ascend,
        ActionKind::Descend,
        ActionKind::MoveLeft,
        ActionKind::MoveRight,
    ] {
        if space.contains(kind) {
            weighted.push((kind, 0.09));
        }
    }
    let total: f64 = weighted.iter().map(|(_, w)| w).sum();
    let mut actions = Vec::with_capacity(length);
    for _ in 0..length {
        let mut r = rng.gen::<f64>() * total;
        let mut chosen = ActionKind::MoveForward;
        for (kind, w) in &weighted {
            if r < *w {
                chosen = *kind;
                break;
            }
            r -= w;
        }
        actions.push(chosen);
    }
    actions
}

fn sample_obstacles(
    reference: &[Pose],
    count: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<ObstacleBox> {
    let mut obstacles = Vec::with_capacity(count);
    'boxes: for _ in 0..count {
        for _attempt in 0..20 {
            let anchor = &reference[rng.gen_range(0..reference.len())];
            let offset_dir = rng.gen_range(0.0..std::f64::consts::TAU);
            let offset = rng.gen_range(12.0..40.0);
            let center = Point3::new(
                anchor.x + offset * offset_dir.cos(),
                anchor.y + offset * offset_dir.sin(),
                (anchor.z + rng.gen_range(-10.0..10.0)).max(0.0),
            );
            let half = (
                rng.gen_range(1.0..6.0),
                rng.gen_range(1.0..6.0),
                rng.gen_range(2.0..12.0),
            );
            let candidate = ObstacleBox::new(
                Point3::new(center.x - half.0, center.y - half.1, center.z - half.2),
                Point3::new(center.x + half.0, center.y + half.1, center.z + half.2),
            );
            if reference.iter().all(|p| !candidate.contains(&p.position())) {
                obstacles.push(candidate);
                continue 'boxes;
            }
        }
        // No clear placement near this route; skip the box.
    }
    obstacles
}

/// Human-readable route text built from the merged command sequence.
fn describe_route(actions: &[ActionKind], space: &ActionSpace) -> String {
    use aeronav_core::actionlang::{render_command, ActionCommand};
    let segments = merge_actions(actions, crate::config::DEFAULT_MERGE_CAP);
    let mut parts = Vec::with_capacity(segments.len());
    for seg in &segments {
        let magnitude = space.step_for(seg.kind).map(|s| s * seg.count as f64);
        let cmd = ActionCommand {
            kind: seg.kind,
            magnitude,
        };
        if let Ok(text) = render_command(&cmd, space) {
            parts.push(
                text.trim_start_matches("The next action is ").to_string(),
            );
        }
    }
    format!("Follow the route: {}.", parts.join(", then "))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generator_is_deterministic_per_seed() {
        let space = ActionSpace::aerial_vln();
        let opts = GeometryOptions::default();
        let a = generate_synthetic_split(10, &space, 7, &opts);
        let b = generate_synthetic_split(10, &space, 7, &opts);
        assert_eq!(a, b);
        let c = generate_synthetic_split(10, &space, 8, &opts);
        assert_ne!(a, c);
    }

    #[test]
    fn goals_sit_at_route_endpoints() {
        let space = ActionSpace::open_fly();
        let episodes = generate_synthetic_split(25, &space, 3, &GeometryOptions::default());
        for ep in &episodes {
            let end = rollout(&ep.start, &ep.gt_actions, &space, &[])
                .unwrap()
                .trajectory
                .last()
                .unwrap()
                .position();
            assert_eq!(end.distance(&ep.goal), 0.0, "episode {}", ep.id);
        }
    }

    #[test]
    fn obstacle_option_keeps_reference_collision_free() {
        let space = ActionSpace::aerial_vln();
        let opts = GeometryOptions {
            with_obstacles: true,
            ..Default::default()
        };
        let episodes = generate_synthetic_split(30, &space, 11, &opts);
        let mut saw_obstacles = false;
        for ep in &episodes {
            saw_obstacles |= !ep.obstacles.is_empty();
            let out = rollout(&ep.start, &ep.gt_actions, &space, &ep.obstacles).unwrap();
            assert!(!out.collided, "reference path hit an obstacle in {}", ep.id);
        }
        assert!(saw_obstacles);
    }

    #[test]
    fn goal_distance_floor_is_honored() {
        let space = ActionSpace::aerial_vln();
        let opts = GeometryOptions {
            min_goal_distance: 150.0,
            ..Default::default()
        };
        let episodes = generate_synthetic_split(40, &space, 5, &opts);
        for ep in &episodes {
            assert!(ep.start.position().distance(&ep.goal) >= 150.0);
        }
    }

    #[test]
    fn self_evaluation_is_perfect() {
        // Feeding the ground truth back through the runner must score
        // sr = 1, ne = 0, ndtw = 1 on every episode.
        let space = ActionSpace::aerial_vln();
        let episodes = generate_synthetic_split(15, &space, 21, &GeometryOptions::default());
        let config = RunConfig::default();
        for ep in &episodes {
            let reference = rollout(&ep.start, &ep.gt_actions, &space, &[]).unwrap().trajectory;
            let input = EvalInput {
                predicted: reference.clone(),
                reference,
                goal: ep.goal,
                shortest_length: ep.start.position().distance(&ep.goal),
                collided: false,
                success_radius: config.success_radius,
                drift_threshold: config.drift_threshold,
            };
            let score = score_episode(&input).unwrap();
            assert!(score.sr);
            assert!(score.ne.abs() < 1e-9);
            assert_eq!(score.ndtw, 1.0);
        }
    }

    #[test]
    fn evaluate_split_keeps_episode_order_across_worker_counts() {
        let space = ActionSpace::aerial_vln();
        let episodes = generate_synthetic_split(24, &space, 13, &GeometryOptions::default());
        let policy = AgentPolicy::RandomSampler { seed: 5 };
        let config = RunConfig {
            workers: 1,
            ..RunConfig::default()
        };
        let serial = evaluate_split(&episodes, &policy, &config).unwrap();
        let config = RunConfig {
            workers: 4,
            ..config
        };
        let parallel = evaluate_split(&episodes, &policy, &config).unwrap();
        assert_eq!(serial.episodes, parallel.episodes);
        assert_eq!(serial.aggregate, parallel.aggregate);
        let ids: Vec<&str> = serial.episodes.iter().map(|r| r.id.as_str()).collect();
        let expected: Vec<&str> = episodes.iter().map(|e| e.id.as_str()).collect();
        assert_eq!(ids, expected);
    }

    #[test]
    fn evaluate_split_rejects_empty_input() {
        let policy = AgentPolicy::OracleGreedy;
        assert!(matches!(
            evaluate_split(&[], &policy, &RunConfig::default()),
            Err(RunnerError::EmptySplit)
        ));
    }

    #[test]
    fn bad_episodes_become_diagnostics_not_failures() {
        let space = ActionSpace::aerial_vln();
        let mut episodes = generate_synthetic_split(4, &space, 2, &GeometryOptions::default());
        episodes[2].action_space = String::from("mars_rover");
        let report = evaluate_split(&episodes, &AgentPolicy::OracleGreedy, &RunConfig::default()).unwrap();
        assert_eq!(report.episodes.len(), 3);
        assert_eq!(report.diagnostics.len(), 1);
        assert!(report.diagnostics[0].contains("mars_rover") || report.diagnostics[0].contains("unknown"));
        assert!(report.aggregate.is_some());
    }

    #[test]
    fn stats_report_merging_effect() {
        let space = ActionSpace::aerial_vln();
        let mut episodes = generate_synthetic_split(8, &space, 31, &GeometryOptions::default());
        // One crafted episode with a known merge outcome.
        episodes[0].gt_actions = vec![ActionKind::MoveForward; 9];
        let stats = preprocess_stats(&episodes, 3);
        assert_eq!(stats.episodes, 8);
        assert!(stats.max_run_after <= 3);
        assert!(stats.after.total_items <= stats.before.total_items);
        assert_eq!(stats.action_histogram.values().sum::<u64>() as usize, stats.before.total_items);
        // The crafted episode contributes three move_forward x3 tokens.
        assert!(stats.token_histogram["move_forward x3"] >= 3);
        // Merging grows the token vocabulary.
        assert!(stats.vocabulary_after > stats.vocabulary_before);
    }

    #[test]
    fn stats_on_distinct_actions_change_nothing() {
        let space = ActionSpace::aerial_vln();
        let episodes = vec![Episode {
            schema_version: crate::episode::SCHEMA_VERSION,
            id: String::from("distinct"),
            action_space: space.name.clone(),
            instruction: String::new(),
            start: Pose::origin(),
            gt_actions: vec![
                ActionKind::MoveForward,
                ActionKind::TurnLeft,
                ActionKind::Ascend,
                ActionKind::MoveRight,
            ],
            goal: Point3::new(0.0, 0.0, 0.0),
            obstacles: Vec::new(),
            frames: None,
            extra: serde_json::Map::new(),
        }];
        let stats = preprocess_stats(&episodes, 3);
        assert_eq!(stats.before.total_items, stats.after.total_items);
        assert_eq!(stats.max_run_before, 1);
        assert_eq!(stats.max_run_after, 1);
    }
}
