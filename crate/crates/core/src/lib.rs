//! Core algorithms for discrete aerial instruction-following pipelines.
//!
//! Everything in this crate is a pure function of its inputs: discrete
//! flight kinematics, bounded run-length action merging and keyframe
//! selection, inverse-frequency supervision weighting, spatial token
//! compression, textual action command parsing, and trajectory metrics.
//! File formats, agents, and the CLI live in the companion `aeronav`
//! crate.
//!
//! The crate is `no_std`-compatible (requires `alloc`); disable the
//! default `std` feature for embedded or wasm targets.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod actionlang;
pub mod kinematics;
pub mod metrics;
pub mod preprocess;
pub mod supervision;
pub mod tokens;

mod sum;

pub use kinematics::{ActionKind, ActionSpace, ObstacleBox, Point3, Pose};
