//! Discrete flight model: poses, action spaces, single-step application,
//! and trajectory rollout with collision detection.
//!
//! Conventions: yaw 0° points along +x, positive yaw turns
//! counter-clockwise in the x-y plane, and `TurnLeft` increases yaw. Yaw
//! is kept normalized to `[0, 360)`. Distances are in environment units,
//! treated as meters by the metric thresholds downstream. Altitude is not
//! clamped at ground level.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

#[cfg(not(feature = "std"))]
use num_traits::Float;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

/// A point in 3D space, in environment units.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    /// Euclidean distance to another point.
    pub fn distance(&self, other: &Point3) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        let dz = self.z - other.z;
        (dx * dx + dy * dy + dz * dz).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

/// Agent state at one timestep: 3D position plus heading in degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    /// Heading in degrees, normalized to `[0, 360)`.
    pub yaw: f64,
}

impl Pose {
    /// Build a pose, normalizing yaw into `[0, 360)`.
    pub fn new(x: f64, y: f64, z: f64, yaw: f64) -> Self {
        debug_assert!(
            x.is_finite() && y.is_finite() && z.is_finite() && yaw.is_finite(),
            "pose coordinates must be finite"
        );
        Self {
            x,
            y,
            z,
            yaw: normalize_yaw(yaw),
        }
    }

    pub fn origin() -> Self {
        Self::new(0.0, 0.0, 0.0, 0.0)
    }

    pub fn position(&self) -> Point3 {
        Point3::new(self.x, self.y, self.z)
    }

    pub fn is_finite(&self) -> bool {
        self.position().is_finite() && self.yaw.is_finite()
    }
}

/// Wrap a yaw angle into `[0, 360)`.
///
/// Uses the exact IEEE remainder so lattice headings (integer multiples
/// of a turn step) stay exact across wraps.
pub fn normalize_yaw(yaw: f64) -> f64 {
    let mut y = yaw % 360.0;
    if y < 0.0 {
        y += 360.0;
    }
    // -1e-17 % 360 + 360 rounds to 360.0 itself; fold it back.
    if y >= 360.0 {
        y = 0.0;
    }
    y
}

/// One primitive control action.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ActionKind {
    MoveForward,
    TurnLeft,
    TurnRight,
    Ascend,
    Descend,
    MoveLeft,
    MoveRight,
    Stop,
}

impl ActionKind {
    /// The spoken verb phrase for this action ("move forward", "stop", ...).
    pub fn phrase(&self) -> &'static str {
        match self {
            ActionKind::MoveForward => "move forward",
            ActionKind::TurnLeft => "turn left",
            ActionKind::TurnRight => "turn right",
            ActionKind::Ascend => "ascend",
            ActionKind::Descend => "descend",
            ActionKind::MoveLeft => "move left",
            ActionKind::MoveRight => "move right",
            ActionKind::Stop => "stop",
        }
    }

    /// Snake-case identifier used in files and token names.
    pub fn ident(&self) -> &'static str {
        match self {
            ActionKind::MoveForward => "move_forward",
            ActionKind::TurnLeft => "turn_left",
            ActionKind::TurnRight => "turn_right",
            ActionKind::Ascend => "ascend",
            ActionKind::Descend => "descend",
            ActionKind::MoveLeft => "move_left",
            ActionKind::MoveRight => "move_right",
            ActionKind::Stop => "stop",
        }
    }

    pub fn is_translation(&self) -> bool {
        matches!(
            self,
            ActionKind::MoveForward
                | ActionKind::MoveLeft
                | ActionKind::MoveRight
                | ActionKind::Ascend
                | ActionKind::Descend
        )
    }

    pub fn is_turn(&self) -> bool {
        matches!(self, ActionKind::TurnLeft | ActionKind::TurnRight)
    }
}

impl fmt::Display for ActionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.phrase())
    }
}

/// Environment-specific action vocabulary with step magnitudes.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct ActionSpace {
    pub name: String,
    /// Fixed vocabulary order; also the deterministic tie-break order.
    pub vocabulary: Vec<ActionKind>,
    /// Horizontal translation step, units.
    pub horizontal_step: f64,
    /// Vertical translation step, units.
    pub vertical_step: f64,
    /// Turn step, degrees.
    pub turn_step: f64,
}

impl ActionSpace {
    /// The 8-action space: horizontal 5 units, vertical 2 units, turns 15°.
    pub fn aerial_vln() -> Self {
        Self {
            name: String::from("aerial_vln"),
            vocabulary: alloc::vec![
                ActionKind::MoveForward,
                ActionKind::TurnLeft,
                ActionKind::TurnRight,
                ActionKind::Ascend,
                ActionKind::Descend,
                ActionKind::MoveLeft,
                ActionKind::MoveRight,
                ActionKind::Stop,
            ],
            horizontal_step: 5.0,
            vertical_step: 2.0,
            turn_step: 15.0,
        }
    }

    /// The 6-action space without lateral moves: 3 units, 3 units, 30°.
    pub fn open_fly() -> Self {
        Self {
            name: String::from("open_fly"),
            vocabulary: alloc::vec![
                ActionKind::MoveForward,
                ActionKind::TurnLeft,
                ActionKind::TurnRight,
                ActionKind::Ascend,
                ActionKind::Descend,
                ActionKind::Stop,
            ],
            horizontal_step: 3.0,
            vertical_step: 3.0,
            turn_step: 30.0,
        }
    }

    /// Look up a built-in space by name. Accepts `aerial_vln` / `open_fly`
    /// with `-` or `_` separators, case-insensitive.
    pub fn by_name(name: &str) -> Option<Self> {
        let mut key = String::with_capacity(name.len());
        for c in name.chars() {
            if c == '-' {
                key.push('_');
            } else {
                key.extend(c.to_lowercase());
            }
        }
        match key.as_str() {
            "aerial_vln" | "aerialvln" => Some(Self::aerial_vln()),
            "open_fly" | "openfly" => Some(Self::open_fly()),
            _ => None,
        }
    }

    pub fn contains(&self, kind: ActionKind) -> bool {
        self.vocabulary.contains(&kind)
    }

    /// Step magnitude for a kind: horizontal/vertical units for
    /// translations, degrees for turns, `None` for `Stop`.
    pub fn step_for(&self, kind: ActionKind) -> Option<f64> {
        match kind {
            ActionKind::MoveForward | ActionKind::MoveLeft | ActionKind::MoveRight => {
                Some(self.horizontal_step)
            }
            ActionKind::Ascend | ActionKind::Descend => Some(self.vertical_step),
            ActionKind::TurnLeft | ActionKind::TurnRight => Some(self.turn_step),
            ActionKind::Stop => None,
        }
    }
}

/// Axis-aligned obstacle box; the boundary counts as contact.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct ObstacleBox {
    pub min: Point3,
    pub max: Point3,
}

impl ObstacleBox {
    pub fn new(min: Point3, max: Point3) -> Self {
        debug_assert!(min.x <= max.x && min.y <= max.y && min.z <= max.z);
        Self { min, max }
    }

    /// Containment test, inclusive of the boundary.
    pub fn contains(&self, p: &Point3) -> bool {
        p.x >= self.min.x
            && p.x <= self.max.x
            && p.y >= self.min.y
            && p.y <= self.max.y
            && p.z >= self.min.z
            && p.z <= self.max.z
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum KinematicsError {
    /// The action kind is not part of the active space's vocabulary.
    UnsupportedAction { kind: ActionKind, space: String },
}

impl fmt::Display for KinematicsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KinematicsError::UnsupportedAction { kind, space } => {
                write!(f, "action `{}` is not in the `{}` vocabulary", kind.ident(), space)
            }
        }
    }
}

impl core::error::Error for KinematicsError {}

/// Apply one action to a pose.
///
/// `MoveForward` translates along the heading, `MoveLeft`/`MoveRight`
/// perpendicular to it (left = heading rotated +90°), `Ascend`/`Descend`
/// change altitude, turns change yaw by the turn step (left = +), and
/// `Stop` returns the pose unchanged.
pub fn apply_action(
    pose: &Pose,
    kind: ActionKind,
    space: &ActionSpace,
) -> Result<Pose, KinematicsError> {
    if !space.contains(kind) {
        return Err(KinematicsError::UnsupportedAction {
            kind,
            space: space.name.clone(),
        });
    }
    let next = match kind {
        ActionKind::Stop => *pose,
        ActionKind::TurnLeft => Pose::new(pose.x, pose.y, pose.z, pose.yaw + space.turn_step),
        ActionKind::TurnRight => Pose::new(pose.x, pose.y, pose.z, pose.yaw - space.turn_step),
        ActionKind::Ascend => Pose::new(pose.x, pose.y, pose.z + space.vertical_step, pose.yaw),
        ActionKind::Descend => Pose::new(pose.x, pose.y, pose.z - space.vertical_step, pose.yaw),
        ActionKind::MoveForward => translate(pose, pose.yaw, space.horizontal_step),
        ActionKind::MoveLeft => translate(pose, pose.yaw + 90.0, space.horizontal_step),
        ActionKind::MoveRight => translate(pose, pose.yaw - 90.0, space.horizontal_step),
    };
    Ok(next)
}

fn translate(pose: &Pose, bearing_deg: f64, step: f64) -> Pose {
    let rad = normalize_yaw(bearing_deg).to_radians();
    Pose::new(
        pose.x + step * rad.cos(),
        pose.y + step * rad.sin(),
        pose.z,
        pose.yaw,
    )
}

/// Result of rolling an action sequence out from a start pose.
#[derive(Debug, Clone, PartialEq)]
pub struct Rollout {
    /// `actions.len() + 1` poses; `trajectory[0]` is the start.
    pub trajectory: Vec<Pose>,
    pub collided: bool,
    /// Index of the first action whose post-step position touched an obstacle.
    pub first_collision_step: Option<usize>,
}

/// Execute an action sequence, recording every intermediate pose.
///
/// Collision is checked at step endpoints only; a collision is recorded
/// but does not halt the rollout.
pub fn rollout(
    start: &Pose,
    actions: &[ActionKind],
    space: &ActionSpace,
    obstacles: &[ObstacleBox],
) -> Result<Rollout, KinematicsError> {
    let mut trajectory = Vec::with_capacity(actions.len() + 1);
    trajectory.push(*start);
    let mut first_collision_step = None;
    let mut pose = *start;
    for (step, &kind) in actions.iter().enumerate() {
        pose = apply_action(&pose, kind, space)?;
        trajectory.push(pose);
        if first_collision_step.is_none() {
            let position = pose.position();
            if obstacles.iter().any(|b| b.contains(&position)) {
                first_collision_step = Some(step);
            }
        }
    }
    Ok(Rollout {
        trajectory,
        collided: first_collision_step.is_some(),
        first_collision_step,
    })
}

/// Straight-line distance between two poses' positions.
///
/// Stands in for the shortest feasible path length when no planner
/// output is available; a lower bound on any executable path.
pub fn shortest_path_length(a: &Pose, b: &Pose) -> f64 {
    a.position().distance(&b.position())
}
