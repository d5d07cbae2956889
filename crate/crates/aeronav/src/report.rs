//! Report rendering: line-delimited JSON records and aligned-column
//! text tables. Output is a pure function of the report contents, so
//! identical runs produce byte-identical files.

use std::collections::BTreeMap;

use aeronav_core::metrics::{Difficulty, FailureKind};
use serde::Serialize;
use serde_json::json;

use crate::runner::{EvalReport, StatsReport};

pub const TOOL_NAME: &str = "aeronav";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// The provenance header line every JSONL output starts with.
pub fn header_json<C: Serialize>(config: &C) -> String {
    serde_json::to_string(&json!({
        "record": "header",
        "schema_version": crate::episode::SCHEMA_VERSION,
        "tool": TOOL_NAME,
        "version": TOOL_VERSION,
        "config": config,
    }))
    .expect("header serializes")
}

/// Render an evaluation report as JSONL: header, one episode record per
/// line, the aggregate, then notes and diagnostics.
pub fn eval_report_jsonl(report: &EvalReport) -> String {
    let mut lines = Vec::with_capacity(report.episodes.len() + 8);
    lines.push(header_json(&report.config));
    for episode in &report.episodes {
        let mut value = serde_json::to_value(episode).expect("episode record serializes");
        value
            .as_object_mut()
            .expect("record is an object")
            .insert(String::from("record"), serde_json::Value::from("episode"));
        lines.push(serde_json::to_string(&value).expect("episode record serializes"));
    }
    if let Some(aggregate) = &report.aggregate {
        let failure_counts: BTreeMap<&str, usize> = FailureKind::ALL
            .iter()
            .zip(aggregate.failure_counts)
            .map(|(kind, count)| (kind.label(), count))
            .collect();
        let difficulty: BTreeMap<&str, serde_json::Value> = Difficulty::ALL
            .iter()
            .zip(&aggregate.difficulty)
            .map(|(level, bucket)| {
                (
                    level.label(),
                    json!({"episodes": bucket.episodes, "sr_pct": bucket.sr_pct}),
                )
            })
            .collect();
        lines.push(
            serde_json::to_string(&json!({
                "record": "aggregate",
                "episodes": aggregate.episodes,
                "ne": aggregate.ne,
                "sr_pct": aggregate.sr_pct,
                "osr_pct": aggregate.osr_pct,
                "ndtw_mean": aggregate.ndtw_mean,
                "sdtw_pct": aggregate.sdtw_pct,
                "spl_pct": aggregate.spl_pct,
                "failure_counts": failure_counts,
                "difficulty": difficulty,
            }))
            .expect("aggregate serializes"),
        );
    }
    for note in &report.notes {
        lines.push(serde_json::to_string(&json!({"record": "note", "text": note})).expect("note"));
    }
    for diagnostic in &report.diagnostics {
        lines.push(
            serde_json::to_string(&json!({"record": "diagnostic", "text": diagnostic}))
                .expect("diagnostic"),
        );
    }
    lines.push(String::new());
    lines.join("\n")
}

/// Render the aggregate as an aligned-column table plus a failure
/// breakdown, matching the usual benchmark layout.
pub fn eval_report_table(report: &EvalReport) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<10} {:>9} {:>7} {:>7} {:>7} {:>7} {:>7}\n",
        "split", "NE", "SR", "OSR", "SDTW", "SPL", "nDTW"
    ));
    if let Some(agg) = &report.aggregate {
        out.push_str(&format!(
            "{:<10} {:>9.1} {:>7.1} {:>7.1} {:>7.1} {:>7.1} {:>7.3}\n",
            "all", agg.ne, agg.sr_pct, agg.osr_pct, agg.sdtw_pct, agg.spl_pct, agg.ndtw_mean
        ));
        out.push('\n');
        out.push_str(&format!("{:<10} {:>9} {:>7}\n", "bucket", "episodes", "SR"));
        for (level, bucket) in Difficulty::ALL.iter().zip(&agg.difficulty) {
            out.push_str(&format!(
                "{:<10} {:>9} {:>7.1}\n",
                level.label(),
                bucket.episodes,
                bucket.sr_pct
            ));
        }
        out.push('\n');
        out.push_str(&format!("{:<20} {:>8}\n", "failure type", "count"));
        for (kind, count) in FailureKind::ALL.iter().zip(agg.failure_counts) {
            out.push_str(&format!("{:<20} {:>8}\n", kind.label(), count));
        }
    } else {
        out.push_str("(no scored episodes)\n");
    }
    if !report.notes.is_empty() {
        out.push('\n');
        for note in &report.notes {
            out.push_str(&format!("note: {note}\n"));
        }
    }
    for diagnostic in &report.diagnostics {
        out.push_str(&format!("diagnostic: {diagnostic}\n"));
    }
    out
}

/// Render merge statistics as JSONL (header + one stats record).
pub fn stats_report_jsonl<C: Serialize>(stats: &StatsReport, config: &C) -> String {
    let mut lines = Vec::with_capacity(3);
    lines.push(header_json(config));
    let mut value = serde_json::to_value(stats).expect("stats serialize");
    value
        .as_object_mut()
        .expect("stats record is an object")
        .insert(String::from("record"), serde_json::Value::from("stats"));
    lines.push(serde_json::to_string(&value).expect("stats serialize"));
    lines.push(String::new());
    lines.join("\n")
}

/// Render merge statistics as a text table.
pub fn stats_report_table(stats: &StatsReport) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "episodes: {}   merge cap: {}\n\n",
        stats.episodes, stats.merge_cap
    ));
    out.push_str(&format!(
        "{:<22} {:>8} {:>8} {:>8} {:>10}\n",
        "sequences", "min", "mean", "max", "total"
    ));
    out.push_str(&format!(
        "{:<22} {:>8} {:>8.1} {:>8} {:>10}\n",
        "primitive actions",
        stats.before.min_len,
        stats.before.mean_len,
        stats.before.max_len,
        stats.before.total_items
    ));
    out.push_str(&format!(
        "{:<22} {:>8} {:>8.1} {:>8} {:>10}\n",
        "merged segments",
        stats.after.min_len,
        stats.after.mean_len,
        stats.after.max_len,
        stats.after.total_items
    ));
    out.push_str(&format!(
        "\nlongest identical run: {} before, {} after\n",
        stats.max_run_before, stats.max_run_after
    ));
    out.push_str(&format!(
        "vocabulary: {} primitive actions -> {} merged tokens\n",
        stats.vocabulary_before, stats.vocabulary_after
    ));
    out.push_str(&format!("\n{:<22} {:>8}\n", "merged token", "count"));
    for (token, count) in &stats.token_histogram {
        out.push_str(&format!("{:<22} {:>8}\n", token, count));
    }
    out
}
