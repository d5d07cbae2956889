//! Episode storage, baseline agents, the evaluation runner, and report
//! formats for discrete aerial navigation pipelines. The pure algorithms
//! live in `aeronav-core`; this crate adds everything that touches the
//! filesystem plus the `aeronav` binary.

pub mod agent;
pub mod cli;
pub mod config;
pub mod episode;
pub mod report;
pub mod runner;
pub mod tokenfile;

pub use aeronav_core as core;
