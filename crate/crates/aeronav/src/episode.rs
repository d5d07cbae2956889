//! Episode records and line-delimited JSON storage.
//!
//! One episode per line, UTF-8, with a `schema_version` field. Unknown
//! fields are carried through load/save untouched, so enrichment by
//! other tools survives a round trip. Malformed lines are collected as
//! diagnostics with their line numbers; well-formed lines still load.

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use aeronav_core::kinematics::{ActionKind, ActionSpace, ObstacleBox, Point3, Pose};
use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const SCHEMA_VERSION: u32 = 1;

fn schema_version_default() -> u32 {
    SCHEMA_VERSION
}

/// One navigation episode: instruction, start state, ground-truth
/// actions, goal, and scene obstacles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Episode {
    #[serde(default = "schema_version_default")]
    pub schema_version: u32,
    pub id: String,
    pub action_space: String,
    pub instruction: String,
    pub start: Pose,
    pub gt_actions: Vec<ActionKind>,
    pub goal: Point3,
    #[serde(default)]
    pub obstacles: Vec<ObstacleBox>,
    #[serde(default)]
    pub frames: Option<Vec<String>>,
    /// Fields this tool does not know about, preserved verbatim.
    #[serde(flatten)]
    pub extra: serde_json::Map<String, Value>,
}

impl Episode {
    /// The action space this episode runs in.
    pub fn space(&self) -> Result<ActionSpace, StorageError> {
        ActionSpace::by_name(&self.action_space).ok_or_else(|| StorageError::Validation {
            detail: format!("unknown action space `{}`", self.action_space),
        })
    }

    fn check(&self) -> Result<(), String> {
        if !self.start.is_finite() {
            return Err(String::from("start pose has non-finite coordinates"));
        }
        if !self.goal.is_finite() {
            return Err(String::from("goal has non-finite coordinates"));
        }
        for (i, b) in self.obstacles.iter().enumerate() {
            if !(b.min.x <= b.max.x && b.min.y <= b.max.y && b.min.z <= b.max.z) {
                return Err(format!("obstacle {i} has min above max"));
            }
        }
        Ok(())
    }
}

/// A per-line load problem; `line` is 1-based.
#[derive(Debug, Clone, PartialEq)]
pub struct LineDiagnostic {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for LineDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

/// Episodes that loaded plus diagnostics for lines that did not.
#[derive(Debug, Default)]
pub struct LoadOutcome {
    pub episodes: Vec<Episode>,
    pub diagnostics: Vec<LineDiagnostic>,
}

#[derive(Debug)]
pub enum StorageError {
    Io { path: String, source: std::io::Error },
    Validation { detail: String },
}

impl fmt::Display for StorageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StorageError::Io { path, source } => write!(f, "{path}: {source}"),
            StorageError::Validation { detail } => f.write_str(detail),
        }
    }
}

impl std::error::Error for StorageError {}

fn io_err(path: &Path, source: std::io::Error) -> StorageError {
    StorageError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Load a JSONL episode file. I/O problems are fatal; malformed records
/// are diagnostics. Blank lines are skipped. An empty file is an empty
/// split.
pub fn load_episodes(path: &Path) -> Result<LoadOutcome, StorageError> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let reader = BufReader::new(file);
    let mut outcome = LoadOutcome::default();
    for (index, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| io_err(path, e))?;
        let number = index + 1;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<Episode>(&line) {
            Ok(mut episode) => match episode.check() {
                Ok(()) => {
                    // Re-normalize the start heading so in-range yaw is an
                    // invariant downstream, whatever the file said.
                    episode.start =
                        Pose::new(episode.start.x, episode.start.y, episode.start.z, episode.start.yaw);
                    outcome.episodes.push(episode);
                }
                Err(message) => outcome.diagnostics.push(LineDiagnostic {
                    line: number,
                    message,
                }),
            },
            Err(e) => outcome.diagnostics.push(LineDiagnostic {
                line: number,
                message: e.to_string(),
            }),
        }
    }
    Ok(outcome)
}

/// Write episodes as one JSON record per line, in order.
pub fn save_episodes(episodes: &[Episode], path: &Path) -> Result<(), StorageError> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut writer = BufWriter::new(file);
    for episode in episodes {
        let line = serde_json::to_string(episode).map_err(|e| StorageError::Validation {
            detail: format!("episode `{}` failed to serialize: {e}", episode.id),
        })?;
        writer.write_all(line.as_bytes()).map_err(|e| io_err(path, e))?;
        writer.write_all(b"\n").map_err(|e| io_err(path, e))?;
    }
    writer.flush().map_err(|e| io_err(path, e))
}

/// Best-effort adapter for external annotation files.
///
/// Accepts either a whole-file JSON object with an `episodes` array or
/// line-delimited foreign records, and maps common field spellings onto
/// [`Episode`]: `episode_id`/`id`, `instruction` as a string or an
/// object with `instruction_text`, `start_position` as `[x, y, z]`,
/// `start_rotation` as `[pitch, yaw, roll]` degrees, actions as index
/// or name lists, and `goal`/`destination`/`goals[0].position`. When no
/// goal is present but actions are, the goal is derived by rolling the
/// actions out. This is a convenience, not a compatibility guarantee.
pub fn import_external(path: &Path, default_space: &str) -> Result<LoadOutcome, StorageError> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut outcome = LoadOutcome::default();
    let trimmed = text.trim_start();
    if trimmed.starts_with('{') {
        let root: Value = serde_json::from_str(&text).map_err(|e| StorageError::Validation {
            detail: format!("{}: {e}", path.display()),
        })?;
        let list = root
            .get("episodes")
            .and_then(Value::as_array)
            .ok_or_else(|| StorageError::Validation {
                detail: format!("{}: expected an `episodes` array", path.display()),
            })?;
        for (i, value) in list.iter().enumerate() {
            adapt_record(value, i + 1, default_space, &mut outcome);
        }
    } else {
        for (index, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            match serde_json::from_str::<Value>(line) {
                Ok(value) => adapt_record(&value, index + 1, default_space, &mut outcome),
                Err(e) => outcome.diagnostics.push(LineDiagnostic {
                    line: index + 1,
                    message: e.to_string(),
                }),
            }
        }
    }
    Ok(outcome)
}

fn adapt_record(value: &Value, line: usize, default_space: &str, outcome: &mut LoadOutcome) {
    match adapt_episode(value, default_space) {
        Ok(episode) => outcome.episodes.push(episode),
        Err(message) => outcome.diagnostics.push(LineDiagnostic { line, message }),
    }
}

fn adapt_episode(value: &Value, default_space: &str) -> Result<Episode, String> {
    // Native records pass through unchanged.
    if let Ok(episode) = serde_json::from_value::<Episode>(value.clone()) {
        if episode.check().is_ok() {
            return Ok(episode);
        }
    }

    let obj = value.as_object().ok_or("record is not a JSON object")?;
    let id = obj
        .get("episode_id")
        .or_else(|| obj.get("id"))
        .map(|v| match v {
            Value::String(s) => s.clone(),
            other => other.to_string(),
        })
        .ok_or("no `episode_id` or `id` field")?;

    let instruction = match obj.get("instruction") {
        Some(Value::String(s)) => s.clone(),
        Some(Value::Object(m)) => m
            .get("instruction_text")
            .and_then(Value::as_str)
            .unwrap_or_default()
            .to_string(),
        _ => String::new(),
    };

    let space_name = obj
        .get("action_space")
        .and_then(Value::as_str)
        .unwrap_or(default_space)
        .to_string();
    let space = ActionSpace::by_name(&space_name)
        .ok_or_else(|| format!("unknown action space `{space_name}`"))?;

    let position = obj
        .get("start_position")
        .and_then(as_triple)
        .ok_or("no `start_position` [x, y, z]")?;
    let yaw = obj
        .get("start_rotation")
        .and_then(as_triple)
        .map(|[_, yaw, _]| yaw)
        .or_else(|| obj.get("start_yaw").and_then(Value::as_f64))
        .unwrap_or(0.0);
    let start = Pose::new(position[0], position[1], position[2], yaw);

    let gt_actions = match obj.get("actions").or_else(|| obj.get("gt_actions")) {
        Some(Value::Array(items)) => items
            .iter()
            .map(|item| adapt_action(item, &space))
            .collect::<Result<Vec<_>, _>>()?,
        _ => Vec::new(),
    };

    let goal = obj
        .get("goal")
        .or_else(|| obj.get("destination"))
        .and_then(as_point)
        .or_else(|| {
            obj.get("goals")
                .and_then(Value::as_array)
                .and_then(|g| g.first())
                .and_then(|g| g.get("position"))
                .and_then(as_point)
        });
    let goal = match goal {
        Some(p) => p,
        None => {
            // Fall back to the endpoint of the annotated actions.
            let motions: Vec<ActionKind> = gt_actions
                .iter()
                .copied()
                .filter(|k| *k != ActionKind::Stop)
                .collect();
            if motions.is_empty() {
                return Err(String::from("no goal and no actions to derive one from"));
            }
            aeronav_core::kinematics::rollout(&start, &motions, &space, &[])
                .map_err(|e| e.to_string())?
                .trajectory
                .last()
                .expect("rollout keeps the start pose")
                .position()
        }
    };

    let episode = Episode {
        schema_version: SCHEMA_VERSION,
        id,
        action_space: space.name.clone(),
        instruction,
        start,
        gt_actions,
        goal,
        obstacles: Vec::new(),
        frames: None,
        extra: serde_json::Map::new(),
    };
    episode.check()?;
    Ok(episode)
}

fn as_triple(value: &Value) -> Option<[f64; 3]> {
    let arr = value.as_array()?;
    if arr.len() != 3 {
        return None;
    }
    Some([arr[0].as_f64()?, arr[1].as_f64()?, arr[2].as_f64()?])
}

fn as_point(value: &Value) -> Option<Point3> {
    if let Some([x, y, z]) = as_triple(value) {
        return Some(Point3::new(x, y, z));
    }
    let obj = value.as_object()?;
    Some(Point3::new(
        obj.get("x")?.as_f64()?,
        obj.get("y")?.as_f64()?,
        obj.get("z")?.as_f64()?,
    ))
}

fn adapt_action(item: &Value, space: &ActionSpace) -> Result<ActionKind, String> {
    match item {
        // Index convention of the common annotation dumps:
        // 0 stop, then forward, turns, vertical, laterals.
        Value::Number(n) => {
            let table = [
                ActionKind::Stop,
                ActionKind::MoveForward,
                ActionKind::TurnLeft,
                ActionKind::TurnRight,
                ActionKind::Ascend,
                ActionKind::Descend,
                ActionKind::MoveLeft,
                ActionKind::MoveRight,
            ];
            let idx = n.as_u64().ok_or_else(|| format!("bad action index {n}"))? as usize;
            let kind = *table.get(idx).ok_or_else(|| format!("action index {idx} out of range"))?;
            if !space.contains(kind) {
                return Err(format!("action `{}` not in `{}`", kind.ident(), space.name));
            }
            Ok(kind)
        }
        Value::String(name) => {
            let kind = match name.to_ascii_lowercase().replace([' ', '-'], "_").as_str() {
                "move_forward" | "forward" => ActionKind::MoveForward,
                "turn_left" => ActionKind::TurnLeft,
                "turn_right" => ActionKind::TurnRight,
                "ascend" | "go_up" | "up" => ActionKind::Ascend,
                "descend" | "go_down" | "down" => ActionKind::Descend,
                "move_left" => ActionKind::MoveLeft,
                "move_right" => ActionKind::MoveRight,
                "stop" => ActionKind::Stop,
                other => return Err(format!("unknown action name `{other}`")),
            };
            if !space.contains(kind) {
                return Err(format!("action `{}` not in `{}`", kind.ident(), space.name));
            }
            Ok(kind)
        }
        other => Err(format!("unsupported action encoding {other}")),
    }
}
