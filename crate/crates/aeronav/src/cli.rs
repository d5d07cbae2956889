//! Command-line interface: one subcommand per pipeline stage.
//!
//! Exit codes: 0 success, 1 validation problems (bad flags, malformed
//! inputs), 2 I/O failures. Every run prints its resolved configuration
//! to stderr and embeds it in the report header, so any output can be
//! reproduced from its own header.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

use aeronav_core::actionlang::{decompose, parse_command, render_command};
use aeronav_core::kinematics::ActionSpace;
use aeronav_core::metrics::{classify_failure, FailureKind};
use aeronav_core::preprocess::{merge_actions, sample_history, select_keyframes};
use aeronav_core::supervision::{compute_weights, ActionDistribution};
use aeronav_core::tokens::{stc_compress, stc_decompress};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::agent::AgentPolicy;
use crate::config::{RunConfig, DEFAULT_DRIFT_THRESHOLD, DEFAULT_LAMBDA_SP, DEFAULT_LAMBDA_TR,
    DEFAULT_MAX_STEPS, DEFAULT_MERGE_CAP, DEFAULT_SUCCESS_RADIUS};
use crate::episode::{import_external, load_episodes, LoadOutcome, StorageError};
use crate::report::{eval_report_jsonl, eval_report_table, stats_report_jsonl, stats_report_table};
use crate::runner::{evaluate_split, generate_synthetic_split, preprocess_stats, GeometryOptions,
    RunnerError};
use crate::tokenfile::{read_token_file, write_token_file, TokenFile, TokenFileError};

#[derive(Parser)]
#[command(
    name = "aeronav",
    version,
    about = "Trajectory preprocessing, supervision weighting, baseline agents, and evaluation for discrete aerial navigation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Merge actions, select keyframes, and sample history per episode
    Preprocess(PreprocessArgs),
    /// Compute inverse-frequency action weights from token counts
    Weights(WeightsArgs),
    /// Run an agent and record its trajectories
    Simulate(SimulateArgs),
    /// Run an agent and score it against the ground truth
    Evaluate(EvaluateArgs),
    /// Report before/after action merging statistics
    Stats(StatsArgs),
    /// Re-label failures in an evaluation report
    ClassifyFailures(ClassifyArgs),
    /// Generate a reachable synthetic episode split
    GenSynthetic(GenArgs),
    /// Compress or decompress a token grid file
    Stc(StcArgs),
    /// Parse an action sentence and echo its decomposition
    Parse(ParseArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PolicyName {
    Random,
    Action,
    Oracle,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum HistoryName {
    CurrentOnly,
    Fifo,
    Uniform,
}

impl HistoryName {
    fn as_str(self) -> &'static str {
        match self {
            HistoryName::CurrentOnly => "current-only",
            HistoryName::Fifo => "fifo",
            HistoryName::Uniform => "uniform",
        }
    }
}

#[derive(Args)]
struct EpisodeInput {
    /// Episode file (JSONL)
    #[arg(long, env = "AERONAV_EPISODES")]
    episodes: PathBuf,
    /// Treat the input as a foreign annotation file and adapt it
    #[arg(long)]
    import: bool,
    /// Action space assumed for imported records lacking one
    #[arg(long, default_value = "aerial_vln")]
    space: String,
}

#[derive(Args)]
struct PreprocessArgs {
    #[command(flatten)]
    input: EpisodeInput,
    /// Longest identical-action run kept as one segment
    #[arg(long, default_value_t = DEFAULT_MERGE_CAP)]
    merge_cap: usize,
    /// History representation strategy
    #[arg(long, value_enum, default_value = "uniform")]
    history: HistoryName,
    /// Frame budget (or FIFO capacity) for history sampling
    #[arg(long, default_value_t = crate::config::DEFAULT_HISTORY_BUDGET)]
    history_budget: usize,
    /// Worker threads; the output is identical for any value
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Output path (stdout when omitted)
    #[arg(long, env = "AERONAV_OUT")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct WeightsArgs {
    /// Token count file: JSONL records with `token` and `count` fields,
    /// or a stats report containing a token histogram
    #[arg(long, env = "AERONAV_DIST")]
    dist: PathBuf,
    #[arg(long, default_value_t = DEFAULT_LAMBDA_SP)]
    lambda_sp: f64,
    #[arg(long, default_value_t = DEFAULT_LAMBDA_TR)]
    lambda_tr: f64,
    /// Output path (stdout when omitted)
    #[arg(long, env = "AERONAV_OUT")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PolicyArgs {
    /// Agent to run
    #[arg(long, value_enum)]
    policy: PolicyName,
    /// Token count file for the action-sampling policy
    #[arg(long)]
    dist: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_MAX_STEPS)]
    max_steps: usize,
    /// Success radius in units
    #[arg(long, default_value_t = DEFAULT_SUCCESS_RADIUS)]
    radius: f64,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    input: EpisodeInput,
    #[command(flatten)]
    policy: PolicyArgs,
    /// Output path (stdout when omitted)
    #[arg(long, env = "AERONAV_OUT")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    input: EpisodeInput,
    #[command(flatten)]
    policy: PolicyArgs,
    #[arg(long, default_value_t = DEFAULT_DRIFT_THRESHOLD)]
    drift_threshold: f64,
    /// Worker threads; the report is identical for any value
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Report file (JSONL); the text table always goes to stdout
    #[arg(long, env = "AERONAV_OUT")]
    out_report: Option<PathBuf>,
}

#[derive(Args)]
struct StatsArgs {
    #[command(flatten)]
    input: EpisodeInput,
    #[arg(long, default_value_t = DEFAULT_MERGE_CAP)]
    merge_cap: usize,
    /// JSONL output path (the table always goes to stdout)
    #[arg(long, env = "AERONAV_OUT")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ClassifyArgs {
    /// Evaluation report (JSONL) to re-label
    #[arg(long, env = "AERONAV_REPORT")]
    report: PathBuf,
    #[arg(long, default_value_t = DEFAULT_DRIFT_THRESHOLD)]
    drift_threshold: f64,
    /// Output path (stdout when omitted)
    #[arg(long, env = "AERONAV_OUT")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    count: usize,
    #[arg(long, default_value = "aerial_vln")]
    space: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 8)]
    min_actions: usize,
    #[arg(long, default_value_t = 60)]
    max_actions: usize,
    /// Minimum start-to-goal displacement in units
    #[arg(long, default_value_t = 0.0)]
    min_goal_distance: f64,
    /// Scatter obstacle boxes off the reference path
    #[arg(long)]
    obstacles: bool,
    #[arg(long, default_value_t = 3)]
    obstacles_per_episode: usize,
    /// Episode file to write
    #[arg(long, env = "AERONAV_OUT")]
    out: PathBuf,
}

#[derive(Args)]
struct StcArgs {
    /// Token file to transform
    #[arg(long, env = "AERONAV_INPUT")]
    input: PathBuf,
    /// Cell size g for compression
    #[arg(long, default_value_t = 2)]
    grid_size: usize,
    /// Invert a compressed file back to its grid
    #[arg(long)]
    decompress: bool,
    /// Token file to write
    #[arg(long, env = "AERONAV_OUT")]
    out: PathBuf,
}

#[derive(Args)]
struct ParseArgs {
    /// Action sentence to parse
    #[arg(long)]
    text: String,
    #[arg(long, default_value = "aerial_vln")]
    space: String,
    /// Also check that the canonical rendering parses back unchanged
    #[arg(long)]
    round_trip: bool,
}

enum CliError {
    Validation(String),
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Io(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Validation(m) | CliError::Io(m) => m,
        }
    }
}

impl From<StorageError> for CliError {
    fn from(e: StorageError) -> Self {
        match e {
            StorageError::Io { .. } => CliError::Io(e.to_string()),
            StorageError::Validation { .. } => CliError::Validation(e.to_string()),
        }
    }
}

impl From<TokenFileError> for CliError {
    fn from(e: TokenFileError) -> Self {
        match e {
            TokenFileError::Io { .. } => CliError::Io(e.to_string()),
            TokenFileError::Format { .. } => CliError::Validation(e.to_string()),
        }
    }
}

impl From<RunnerError> for CliError {
    fn from(e: RunnerError) -> Self {
        CliError::Validation(e.to_string())
    }
}

/// Parse arguments, dispatch, and return the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are success, not usage errors.
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let outcome = match cli.command {
        Command::Preprocess(args) => cmd_preprocess(args),
        Command::Weights(args) => cmd_weights(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::Stats(args) => cmd_stats(args),
        Command::ClassifyFailures(args) => cmd_classify(args),
        Command::GenSynthetic(args) => cmd_gen(args),
        Command::Stc(args) => cmd_stc(args),
        Command::Parse(args) => cmd_parse(args),
    };
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.exit_code()
        }
    }
}

fn echo_config(config: &RunConfig) {
    eprintln!(
        "config: {}",
        serde_json::to_string(config).expect("config serializes")
    );
}

fn write_output(path: Option<&Path>, content: &str) -> Result<(), CliError> {
    match path {
        Some(path) => std::fs::write(path, content)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display()))),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn load_input(input: &EpisodeInput) -> Result<LoadOutcome, CliError> {
    let outcome = if input.import {
        import_external(&input.episodes, &input.space)?
    } else {
        load_episodes(&input.episodes)?
    };
    for diagnostic in &outcome.diagnostics {
        eprintln!("warning: {}: {diagnostic}", input.episodes.display());
    }
    Ok(outcome)
}

fn resolve_space(name: &str) -> Result<ActionSpace, CliError> {
    ActionSpace::by_name(name)
        .ok_or_else(|| CliError::Validation(format!("unknown action space `{name}`")))
}

/// Token counts from a JSONL file of `{token, count}` records or a
/// stats report with a `token_histogram`.
fn load_counts(path: &Path) -> Result<BTreeMap<String, u64>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let mut counts = BTreeMap::new();
    for (index, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value = serde_json::from_str(line).map_err(|e| {
            CliError::Validation(format!("{}:{}: {e}", path.display(), index + 1))
        })?;
        if let Some(histogram) = value.get("token_histogram").and_then(|v| v.as_object()) {
            for (token, count) in histogram {
                if let Some(count) = count.as_u64() {
                    *counts.entry(token.clone()).or_insert(0) += count;
                }
            }
            continue;
        }
        match (
            value.get("token").and_then(|v| v.as_str()),
            value.get("count").and_then(|v| v.as_u64()),
        ) {
            (Some(token), Some(count)) => {
                *counts.entry(token.to_string()).or_insert(0) += count;
            }
            _ => {
                // Header, note, and other record kinds pass through.
                let kind = value.get("record").and_then(|v| v.as_str());
                if kind.is_none() {
                    return Err(CliError::Validation(format!(
                        "{}:{}: expected `token` and `count` fields",
                        path.display(),
                        index + 1
                    )));
                }
            }
        }
    }
    if counts.is_empty() {
        return Err(CliError::Validation(format!(
            "{}: no token counts found",
            path.display()
        )));
    }
    Ok(counts)
}

fn build_policy(args: &PolicyArgs) -> Result<AgentPolicy, CliError> {
    match args.policy {
        PolicyName::Random => Ok(AgentPolicy::RandomSampler { seed: args.seed }),
        PolicyName::Oracle => Ok(AgentPolicy::OracleGreedy),
        PolicyName::Action => {
            let path = args.dist.as_ref().ok_or_else(|| {
                CliError::Validation(String::from("--policy action needs --dist <counts file>"))
            })?;
            let counts = load_counts(path)?;
            let mut distribution = Vec::with_capacity(counts.len());
            for (token, count) in counts {
                // Merged tokens ("turn_left x3") weigh their primitive kind.
                let base = token.split_whitespace().next().unwrap_or(&token);
                let kind = action_kind_by_ident(base).ok_or_else(|| {
                    CliError::Validation(format!("unknown action token `{token}`"))
                })?;
                match distribution.iter_mut().find(|(k, _)| *k == kind) {
                    Some((_, weight)) => *weight += count as f64,
                    None => distribution.push((kind, count as f64)),
                }
            }
            Ok(AgentPolicy::ActionSampler {
                distribution,
                seed: args.seed,
            })
        }
    }
}

fn action_kind_by_ident(ident: &str) -> Option<aeronav_core::kinematics::ActionKind> {
    use aeronav_core::kinematics::ActionKind::*;
    let all = [
        MoveForward, TurnLeft, TurnRight, Ascend, Descend, MoveLeft, MoveRight, Stop,
    ];
    all.into_iter().find(|k| k.ident() == ident)
}

fn cmd_preprocess(args: PreprocessArgs) -> Result<(), CliError> {
    if args.merge_cap == 0 {
        return Err(CliError::Validation(String::from("--merge-cap must be at least 1")));
    }
    let config = RunConfig {
        action_space: args.input.space.clone(),
        merge_cap: args.merge_cap,
        history_policy: args.history.as_str().to_string(),
        history_budget: args.history_budget,
        workers: args.workers,
        input: Some(args.input.episodes.display().to_string()),
        output: args.out.as_ref().map(|p| p.display().to_string()),
        ..RunConfig::default()
    };
    echo_config(&config);
    let policy = config.history().ok_or_else(|| {
        CliError::Validation(format!("unknown history policy `{}`", config.history_policy))
    })?;

    let outcome = load_input(&args.input)?;
    let records = crate::runner::parallel_ordered_map(&outcome.episodes, args.workers, |episode| {
        let segments = merge_actions(&episode.gt_actions, args.merge_cap);
        let total_frames = episode.gt_actions.len() + 1;
        let keyframes = select_keyframes(&segments, total_frames)
            .map_err(|e| format!("episode `{}`: {e}", episode.id))?;
        let history = sample_history(&keyframes, &policy)
            .map_err(|e| format!("episode `{}`: {e}", episode.id))?;
        Ok::<String, String>(
            serde_json::to_string(&json!({
                "record": "episode",
                "id": episode.id,
                "segments": segments,
                "keyframes": keyframes,
                "history": history,
            }))
            .expect("record serializes"),
        )
    });
    let mut lines = Vec::with_capacity(records.len() + 2);
    lines.push(crate::report::header_json(&config));
    for record in records {
        lines.push(record.map_err(CliError::Validation)?);
    }
    lines.push(String::new());
    write_output(args.out.as_deref(), &lines.join("\n"))
}

fn cmd_weights(args: WeightsArgs) -> Result<(), CliError> {
    let config = RunConfig {
        lambda_sp: args.lambda_sp,
        lambda_tr: args.lambda_tr,
        input: Some(args.dist.display().to_string()),
        output: args.out.as_ref().map(|p| p.display().to_string()),
        ..RunConfig::default()
    };
    echo_config(&config);
    let counts = load_counts(&args.dist)?;
    let dist = ActionDistribution::from_counts(&counts)
        .map_err(|e| CliError::Validation(e.to_string()))?;
    let table = compute_weights(&dist).map_err(|e| CliError::Validation(e.to_string()))?;

    let mut lines = Vec::with_capacity(table.weights().len() + 2);
    lines.push(crate::report::header_json(&config));
    for (token, weight) in table.weights() {
        lines.push(
            serde_json::to_string(&json!({
                "record": "weight",
                "token": token,
                "probability": dist.probs()[token],
                "weight": weight,
            }))
            .expect("record serializes"),
        );
    }
    lines.push(String::new());
    write_output(args.out.as_deref(), &lines.join("\n"))
}

fn run_config_for_policy(input: &EpisodeInput, policy: &PolicyArgs) -> RunConfig {
    RunConfig {
        action_space: input.space.clone(),
        success_radius: policy.radius,
        seed: policy.seed,
        max_steps: policy.max_steps,
        policy: Some(
            match policy.policy {
                PolicyName::Random => "random",
                PolicyName::Action => "action",
                PolicyName::Oracle => "oracle",
            }
            .to_string(),
        ),
        input: Some(input.episodes.display().to_string()),
        ..RunConfig::default()
    }
}

fn cmd_simulate(args: SimulateArgs) -> Result<(), CliError> {
    let mut config = run_config_for_policy(&args.input, &args.policy);
    config.output = args.out.as_ref().map(|p| p.display().to_string());
    echo_config(&config);
    let policy = build_policy(&args.policy)?;
    let outcome = load_input(&args.input)?;
    if outcome.episodes.is_empty() {
        return Err(CliError::Validation(String::from("no episodes to simulate")));
    }

    let opts = crate::agent::AgentOptions {
        max_steps: args.policy.max_steps,
        success_radius: args.policy.radius,
    };
    let mut lines = Vec::with_capacity(outcome.episodes.len() + 2);
    lines.push(crate::report::header_json(&config));
    for episode in &outcome.episodes {
        match crate::agent::run_agent(episode, &policy, &opts) {
            Ok(run) => lines.push(
                serde_json::to_string(&json!({
                    "record": "run",
                    "id": episode.id,
                    "actions": run.actions,
                    "trajectory": run.rollout.trajectory,
                    "collided": run.rollout.collided,
                    "first_collision_step": run.rollout.first_collision_step,
                }))
                .expect("record serializes"),
            ),
            Err(e) => lines.push(
                serde_json::to_string(&json!({
                    "record": "diagnostic",
                    "text": format!("episode `{}`: {e}", episode.id),
                }))
                .expect("record serializes"),
            ),
        }
    }
    lines.push(String::new());
    write_output(args.out.as_deref(), &lines.join("\n"))
}

fn cmd_evaluate(args: EvaluateArgs) -> Result<(), CliError> {
    let mut config = run_config_for_policy(&args.input, &args.policy);
    config.drift_threshold = args.drift_threshold;
    config.workers = args.workers;
    config.output = args.out_report.as_ref().map(|p| p.display().to_string());
    echo_config(&config);
    let policy = build_policy(&args.policy)?;
    let outcome = load_input(&args.input)?;
    let report = evaluate_split(&outcome.episodes, &policy, &config)?;

    if let Some(path) = &args.out_report {
        write_output(Some(path), &eval_report_jsonl(&report))?;
    }
    print!("{}", eval_report_table(&report));
    Ok(())
}

fn cmd_stats(args: StatsArgs) -> Result<(), CliError> {
    if args.merge_cap == 0 {
        return Err(CliError::Validation(String::from("--merge-cap must be at least 1")));
    }
    let config = RunConfig {
        action_space: args.input.space.clone(),
        merge_cap: args.merge_cap,
        input: Some(args.input.episodes.display().to_string()),
        output: args.out.as_ref().map(|p| p.display().to_string()),
        ..RunConfig::default()
    };
    echo_config(&config);
    let outcome = load_input(&args.input)?;
    let stats = preprocess_stats(&outcome.episodes, args.merge_cap);
    if let Some(path) = &args.out {
        write_output(Some(path), &stats_report_jsonl(&stats, &config))?;
    }
    print!("{}", stats_report_table(&stats));
    Ok(())
}

fn cmd_classify(args: ClassifyArgs) -> Result<(), CliError> {
    let config = RunConfig {
        drift_threshold: args.drift_threshold,
        input: Some(args.report.display().to_string()),
        output: args.out.as_ref().map(|p| p.display().to_string()),
        ..RunConfig::default()
    };
    echo_config(&config);
    let text = std::fs::read_to_string(&args.report)
        .map_err(|e| CliError::Io(format!("{}: {e}", args.report.display())))?;

    let mut lines = Vec::new();
    lines.push(crate::report::header_json(&config));
    let mut counts: BTreeMap<&'static str, usize> = BTreeMap::new();
    let mut seen = 0usize;
    for (index, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value = serde_json::from_str(line).map_err(|e| {
            CliError::Validation(format!("{}:{}: {e}", args.report.display(), index + 1))
        })?;
        if value.get("record").and_then(|v| v.as_str()) != Some("episode") {
            continue;
        }
        let field = |name: &str| value.get(name).and_then(|v| v.as_bool());
        let (Some(sr), Some(osr), Some(collided)) = (field("sr"), field("osr"), field("collided"))
        else {
            return Err(CliError::Validation(format!(
                "{}:{}: episode record lacks sr/osr/collided",
                args.report.display(),
                index + 1
            )));
        };
        let ndtw = value.get("ndtw").and_then(|v| v.as_f64()).ok_or_else(|| {
            CliError::Validation(format!(
                "{}:{}: episode record lacks ndtw",
                args.report.display(),
                index + 1
            ))
        })?;
        seen += 1;
        if sr {
            continue;
        }
        let kind = classify_failure(osr, collided, ndtw, args.drift_threshold);
        *counts.entry(kind.label()).or_insert(0) += 1;
        lines.push(
            serde_json::to_string(&json!({
                "record": "failure",
                "id": value.get("id"),
                "failure": kind.label(),
            }))
            .expect("record serializes"),
        );
    }
    if seen == 0 {
        return Err(CliError::Validation(format!(
            "{}: no episode records found",
            args.report.display()
        )));
    }
    let full_counts: BTreeMap<&str, usize> = FailureKind::ALL
        .iter()
        .map(|k| (k.label(), counts.get(k.label()).copied().unwrap_or(0)))
        .collect();
    lines.push(
        serde_json::to_string(&json!({
            "record": "failure_counts",
            "episodes": seen,
            "counts": full_counts,
        }))
        .expect("record serializes"),
    );
    lines.push(String::new());
    write_output(args.out.as_deref(), &lines.join("\n"))?;
    for (label, count) in &full_counts {
        eprintln!("{label:<20} {count}");
    }
    Ok(())
}

fn cmd_gen(args: GenArgs) -> Result<(), CliError> {
    if args.count == 0 {
        return Err(CliError::Validation(String::from("--count must be at least 1")));
    }
    if args.min_actions == 0 || args.max_actions < args.min_actions {
        return Err(CliError::Validation(String::from(
            "--min-actions must be at least 1 and --max-actions at least --min-actions",
        )));
    }
    let space = resolve_space(&args.space)?;
    let config = RunConfig {
        action_space: space.name.clone(),
        seed: args.seed,
        output: Some(args.out.display().to_string()),
        ..RunConfig::default()
    };
    echo_config(&config);
    let options = GeometryOptions {
        min_actions: args.min_actions,
        max_actions: args.max_actions,
        min_goal_distance: args.min_goal_distance,
        with_obstacles: args.obstacles,
        obstacles_per_episode: args.obstacles_per_episode,
        ..GeometryOptions::default()
    };
    let episodes = generate_synthetic_split(args.count, &space, args.seed, &options);
    crate::episode::save_episodes(&episodes, &args.out)?;
    eprintln!("wrote {} episodes to {}", episodes.len(), args.out.display());
    Ok(())
}

fn cmd_stc(args: StcArgs) -> Result<(), CliError> {
    if args.grid_size == 0 {
        return Err(CliError::Validation(String::from("--grid-size must be at least 1")));
    }
    let config = RunConfig {
        input: Some(args.input.display().to_string()),
        output: Some(args.out.display().to_string()),
        ..RunConfig::default()
    };
    echo_config(&config);
    let file = read_token_file(&args.input)?;
    let transformed = if args.decompress {
        match file {
            TokenFile::Compressed {
                tokens,
                original_height,
                original_width,
            } => {
                let grid = stc_decompress(&tokens, original_height, original_width)
                    .map_err(|e| CliError::Validation(e.to_string()))?;
                TokenFile::Grid(grid)
            }
            TokenFile::Grid(_) => {
                return Err(CliError::Validation(String::from(
                    "--decompress expects a compressed token file",
                )))
            }
        }
    } else {
        match file {
            TokenFile::Grid(grid) => {
                let comp = stc_compress(&grid, args.grid_size);
                TokenFile::Compressed {
                    tokens: comp,
                    original_height: grid.height,
                    original_width: grid.width,
                }
            }
            TokenFile::Compressed { .. } => {
                return Err(CliError::Validation(String::from(
                    "input is already compressed; use --decompress to invert it",
                )))
            }
        }
    };
    write_token_file(&transformed, &args.out)?;
    Ok(())
}

fn cmd_parse(args: ParseArgs) -> Result<(), CliError> {
    let space = resolve_space(&args.space)?;
    let config = RunConfig {
        action_space: space.name.clone(),
        ..RunConfig::default()
    };
    echo_config(&config);
    let command = parse_command(&args.text, &space)
        .map_err(|e| CliError::Validation(e.to_string()))?;
    let canonical = render_command(&command, &space)
        .map_err(|e| CliError::Validation(e.to_string()))?;
    let primitives = decompose(&command, &space)
        .map_err(|e| CliError::Validation(e.to_string()))?;
    if args.round_trip {
        let reparsed = parse_command(&canonical, &space)
            .map_err(|e| CliError::Validation(format!("canonical text failed to parse: {e}")))?;
        if reparsed != command {
            return Err(CliError::Validation(format!(
                "round trip mismatch: {command:?} vs {reparsed:?}"
            )));
        }
    }
    println!(
        "{}",
        serde_json::to_string(&json!({
            "kind": command.kind,
            "magnitude": command.magnitude,
            "canonical": canonical,
            "primitives": primitives,
            "round_trip": if args.round_trip { Some("ok") } else { None },
        }))
        .expect("record serializes")
    );
    Ok(())
}
