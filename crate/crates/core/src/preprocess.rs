//! Trajectory restructuring: bounded run-length action merging, boundary
//! keyframe selection, and history-frame sampling policies.
//!
//! Frame model: frame `i` is the observation captured before executing
//! action `i`, so a trajectory of `n` actions has `n + 1` frames. A merged
//! segment covering actions `[j, j + count)` spans frames `j ..= j + count`.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::kinematics::ActionKind;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

/// A run of identical primitive actions, bounded by the merge cap.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct MergedSegment {
    pub kind: ActionKind,
    /// Number of primitive steps merged, `1 ..= merge_cap`.
    pub count: usize,
    pub start_frame: usize,
    pub end_frame: usize,
}

impl MergedSegment {
    /// Token name for distribution/weighting purposes, e.g.
    /// `turn_left x3`; a single step is the bare identifier.
    pub fn token(&self) -> String {
        merged_token(self.kind, self.count)
    }
}

/// Canonical token string for a merged action of `count` steps.
pub fn merged_token(kind: ActionKind, count: usize) -> String {
    if count == 1 {
        String::from(kind.ident())
    } else {
        alloc::format!("{} x{}", kind.ident(), count)
    }
}

/// How past observation frames are carried into the model context.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum HistoryPolicy {
    /// Only the latest observation.
    CurrentOnly,
    /// Fixed-size first-in-first-out bank of the most recent frames.
    FifoBank { capacity: usize },
    /// Evenly spaced sample over the whole trajectory, always keeping
    /// the first and the current frame.
    LongHorizonUniform { budget: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PreprocessError {
    /// Segment spans do not chain over `[0, total_frames - 1]`.
    MalformedSegments { detail: String },
    /// History sampling needs at least one frame.
    EmptyHistory,
}

impl fmt::Display for PreprocessError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PreprocessError::MalformedSegments { detail } => {
                write!(f, "malformed segments: {detail}")
            }
            PreprocessError::EmptyHistory => f.write_str("history sampling needs frames"),
        }
    }
}

impl core::error::Error for PreprocessError {}

/// Merge consecutive identical actions into segments of at most
/// `merge_cap` steps. Frame indices partition `[0, actions.len()]`.
pub fn merge_actions(actions: &[ActionKind], merge_cap: usize) -> Vec<MergedSegment> {
    assert!(merge_cap >= 1, "merge_cap must be at least 1");
    let mut segments = Vec::new();
    let mut i = 0;
    while i < actions.len() {
        let kind = actions[i];
        let mut count = 1;
        while count < merge_cap && i + count < actions.len() && actions[i + count] == kind {
            count += 1;
        }
        segments.push(MergedSegment {
            kind,
            count,
            start_frame: i,
            end_frame: i + count,
        });
        i += count;
    }
    segments
}

/// Expand merged segments back to the primitive action sequence.
pub fn expand_segments(segments: &[MergedSegment]) -> Vec<ActionKind> {
    let mut actions = Vec::with_capacity(segments.iter().map(|s| s.count).sum());
    for seg in segments {
        for _ in 0..seg.count {
            actions.push(seg.kind);
        }
    }
    actions
}

/// Keyframes are the sorted, deduplicated segment boundary frames; the
/// first and final frame are always present.
pub fn select_keyframes(
    segments: &[MergedSegment],
    total_frames: usize,
) -> Result<Vec<usize>, PreprocessError> {
    if total_frames == 0 {
        return Err(PreprocessError::MalformedSegments {
            detail: String::from("a trajectory has at least one frame"),
        });
    }
    if segments.is_empty() {
        if total_frames == 1 {
            return Ok(alloc::vec![0]);
        }
        return Err(PreprocessError::MalformedSegments {
            detail: alloc::format!("no segments but {total_frames} frames"),
        });
    }

    let mut expected_start = 0;
    for (i, seg) in segments.iter().enumerate() {
        if seg.count == 0 {
            return Err(PreprocessError::MalformedSegments {
                detail: alloc::format!("segment {i} has zero count"),
            });
        }
        if seg.start_frame != expected_start {
            return Err(PreprocessError::MalformedSegments {
                detail: alloc::format!(
                    "segment {i} starts at frame {} (expected {expected_start})",
                    seg.start_frame
                ),
            });
        }
        if seg.end_frame != seg.start_frame + seg.count {
            return Err(PreprocessError::MalformedSegments {
                detail: alloc::format!("segment {i} span does not match its count"),
            });
        }
        expected_start = seg.end_frame;
    }
    if expected_start != total_frames - 1 {
        return Err(PreprocessError::MalformedSegments {
            detail: alloc::format!(
                "segments end at frame {expected_start} but the final frame is {}",
                total_frames - 1
            ),
        });
    }

    let mut keyframes = Vec::with_capacity(segments.len() + 1);
    keyframes.push(segments[0].start_frame);
    for seg in segments {
        keyframes.push(seg.end_frame);
    }
    keyframes.dedup();
    Ok(keyframes)
}

/// Sample history frames from a strictly increasing frame index list.
pub fn sample_history(
    frames: &[usize],
    policy: &HistoryPolicy,
) -> Result<Vec<usize>, PreprocessError> {
    if frames.is_empty() {
        return Err(PreprocessError::EmptyHistory);
    }
    debug_assert!(frames.windows(2).all(|w| w[0] < w[1]));
    let n = frames.len();
    let picked = match *policy {
        HistoryPolicy::CurrentOnly => alloc::vec![frames[n - 1]],
        HistoryPolicy::FifoBank { capacity } => {
            assert!(capacity >= 1, "FIFO capacity must be at least 1");
            frames[n - capacity.min(n)..].to_vec()
        }
        HistoryPolicy::LongHorizonUniform { budget } => {
            assert!(budget >= 2, "uniform budget must hold first + current");
            if n <= budget {
                frames.to_vec()
            } else {
                let positions = even_positions(n, budget);
                positions.iter().map(|&p| frames[p]).collect()
            }
        }
    };
    Ok(picked)
}

/// Evenly spaced positions over `0 ..= n - 1` including both endpoints:
/// `floor(i * (n - 1) / (k - 1))`, the integer-cast linspace convention.
/// If truncation ever collides, unused positions backfill to keep the
/// count at `k`.
fn even_positions(n: usize, k: usize) -> Vec<usize> {
    debug_assert!(n > k && k >= 2);
    let mut positions = Vec::with_capacity(k);
    for i in 0..k {
        let p = i * (n - 1) / (k - 1);
        if positions.last() != Some(&p) {
            positions.push(p);
        }
    }
    let mut fill = 0;
    while positions.len() < k && fill < n {
        if let Err(at) = positions.binary_search(&fill) {
            positions.insert(at, fill);
        }
        fill += 1;
    }
    positions
}
