//! Bridge between textual action commands and executable primitives.
//!
//! Commands are rendered with the fixed template
//! `The next action is <verb phrase> <magnitude> <unit word>`
//! ("units" for translations, "degrees" for turns) and
//! `The next action is stop` for the no-argument form.
//!
//! Parsing accepts arbitrary surrounding prose and is equivalent to the
//! case-insensitive pattern
//!
//! ```text
//! \b(move forward|turn left|turn right|ascend|descend|move left|move right|stop)\b(?:.*?\b(\d+)\b)?
//! ```
//!
//! restricted to the active vocabulary: the first verb phrase wins, the
//! first integer after it (if any) is the magnitude, and a missing
//! magnitude means one primitive step. Magnitudes must be positive
//! multiples of the step size for their verb class; anything else is an
//! error, never coerced.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::kinematics::{ActionKind, ActionSpace};

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

/// A parsed or to-be-rendered action command. `magnitude` is in units
/// for translations and degrees for turns; `None` for `Stop`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct ActionCommand {
    pub kind: ActionKind,
    pub magnitude: Option<f64>,
}

impl ActionCommand {
    /// Validate a command against a space: the kind must be in the
    /// vocabulary and the magnitude a positive integer multiple of the
    /// step for its class.
    pub fn new(
        kind: ActionKind,
        magnitude: Option<f64>,
        space: &ActionSpace,
    ) -> Result<Self, ActionLangError> {
        if !space.contains(kind) {
            return Err(ActionLangError::UnsupportedAction {
                kind,
                space: space.name.clone(),
            });
        }
        match (kind, magnitude) {
            (ActionKind::Stop, None) => Ok(Self { kind, magnitude: None }),
            (ActionKind::Stop, Some(_)) => Err(ActionLangError::InvalidMagnitude {
                kind,
                magnitude: magnitude.unwrap_or(0.0),
                step: 0.0,
            }),
            (_, None) => Err(ActionLangError::InvalidMagnitude {
                kind,
                magnitude: 0.0,
                step: space.step_for(kind).unwrap_or(0.0),
            }),
            (_, Some(mag)) => {
                let step = space.step_for(kind).expect("non-stop actions have a step");
                if step_multiple(mag, step).is_none() {
                    return Err(ActionLangError::InvalidMagnitude {
                        kind,
                        magnitude: mag,
                        step,
                    });
                }
                Ok(Self {
                    kind,
                    magnitude: Some(mag),
                })
            }
        }
    }

    /// One primitive step of `kind` in `space`.
    pub fn single_step(kind: ActionKind, space: &ActionSpace) -> Result<Self, ActionLangError> {
        Self::new(kind, space.step_for(kind), space)
    }

    /// Number of primitive steps this command decomposes into.
    pub fn steps(&self, space: &ActionSpace) -> usize {
        match self.magnitude {
            None => 1,
            Some(mag) => {
                let step = space.step_for(self.kind).unwrap_or(1.0);
                step_multiple(mag, step).unwrap_or(1)
            }
        }
    }
}

/// `mag / step` when it is a positive integer within float tolerance.
fn step_multiple(mag: f64, step: f64) -> Option<usize> {
    if !mag.is_finite() || mag <= 0.0 || !step.is_finite() || step <= 0.0 {
        return None;
    }
    let ratio = mag / step;
    let rounded = ratio.round();
    if rounded < 1.0 || (ratio - rounded).abs() > 1e-9 {
        return None;
    }
    Some(rounded as usize)
}

#[derive(Debug, Clone, PartialEq)]
pub enum ActionLangError {
    /// No vocabulary verb phrase found in the text.
    UnparsableAction { text: String },
    /// Magnitude is not a positive multiple of the step for its class.
    InvalidMagnitude { kind: ActionKind, magnitude: f64, step: f64 },
    UnsupportedAction { kind: ActionKind, space: String },
}

impl fmt::Display for ActionLangError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ActionLangError::UnparsableAction { text } => {
                write!(f, "no action verb found in {text:?}")
            }
            ActionLangError::InvalidMagnitude { kind, magnitude, step } => write!(
                f,
                "magnitude {magnitude} is not a positive multiple of the {step} step for `{}`",
                kind.ident()
            ),
            ActionLangError::UnsupportedAction { kind, space } => {
                write!(f, "action `{}` is not in the `{space}` vocabulary", kind.ident())
            }
        }
    }
}

impl core::error::Error for ActionLangError {}

/// Render the canonical command sentence.
pub fn render_command(cmd: &ActionCommand, space: &ActionSpace) -> Result<String, ActionLangError> {
    let cmd = ActionCommand::new(cmd.kind, cmd.magnitude, space)?;
    match cmd.magnitude {
        None => Ok(String::from("The next action is stop")),
        Some(mag) => {
            let unit = if cmd.kind.is_turn() { "degrees" } else { "units" };
            Ok(alloc::format!(
                "The next action is {} {} {}",
                cmd.kind.phrase(),
                format_magnitude(mag),
                unit
            ))
        }
    }
}

/// Magnitudes are integer multiples of integer steps in both built-in
/// spaces; print them without a trailing fraction when whole.
fn format_magnitude(mag: f64) -> String {
    if mag.fract() == 0.0 && mag.abs() < 1e15 {
        alloc::format!("{}", mag as i64)
    } else {
        alloc::format!("{mag}")
    }
}

/// Lowercased word tokens of `text` (alphanumeric runs), in order.
fn words(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut current = String::new();
    for c in text.chars() {
        if c.is_alphanumeric() {
            current.extend(c.to_lowercase());
        } else if !current.is_empty() {
            out.push(core::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        out.push(current);
    }
    out
}

/// Extract the first action command from free-form text.
///
/// The earliest vocabulary verb phrase wins (longest phrase on ties at
/// the same position). The first integer after the phrase is taken as
/// the magnitude; a motion verb with no magnitude means one step. Unit
/// words are accepted and ignored. Trailing numbers after `stop` are
/// ignored.
pub fn parse_command(text: &str, space: &ActionSpace) -> Result<ActionCommand, ActionLangError> {
    let tokens = words(text);
    let phrases: Vec<(ActionKind, Vec<&str>)> = space
        .vocabulary
        .iter()
        .map(|&kind| (kind, kind.phrase().split(' ').collect()))
        .collect();

    let mut found: Option<(ActionKind, usize)> = None;
    'scan: for start in 0..tokens.len() {
        let mut best: Option<(ActionKind, usize)> = None;
        for (kind, phrase) in &phrases {
            if phrase.len() <= tokens.len() - start
                && phrase
                    .iter()
                    .zip(&tokens[start..])
                    .all(|(p, t)| *p == t.as_str())
            {
                match best {
                    Some((_, len)) if len >= phrase.len() => {}
                    _ => best = Some((*kind, phrase.len())),
                }
            }
        }
        if let Some((kind, len)) = best {
            found = Some((kind, start + len));
            break 'scan;
        }
    }

    let (kind, after) = found.ok_or_else(|| ActionLangError::UnparsableAction {
        text: String::from(text),
    })?;

    if kind == ActionKind::Stop {
        return ActionCommand::new(ActionKind::Stop, None, space);
    }

    let magnitude = tokens[after..]
        .iter()
        .find_map(|t| t.parse::<u64>().ok())
        .map(|m| m as f64);
    let step = space.step_for(kind).expect("non-stop actions have a step");
    ActionCommand::new(kind, Some(magnitude.unwrap_or(step)), space)
}

/// Decompose a command into fixed-step primitives for open-loop
/// execution; `Stop` decomposes into a single `Stop`.
pub fn decompose(cmd: &ActionCommand, space: &ActionSpace) -> Result<Vec<ActionKind>, ActionLangError> {
    let cmd = ActionCommand::new(cmd.kind, cmd.magnitude, space)?;
    Ok(alloc::vec![cmd.kind; cmd.steps(space)])
}
