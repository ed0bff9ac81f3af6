//! CSV and text renderings of episode logs and statistics tables.

use std::fmt::Write as _;
use std::path::Path;

use quadfuse::sim::{EpisodeLog, FilterKind, Scenario, StatsTable, Summary};

use crate::CliError;

pub const TRAJECTORY_HEADER: &str = "xref,yref,kf-x,kf-y,mcckf-x,mcckf-y";

type Column = fn(&Summary<f64>) -> f64;

const ROWS: [(&str, Column); 4] = [
    ("mean", |s| s.mean),
    ("median", |s| s.median),
    ("75%tile", |s| s.p75),
    ("25%tile", |s| s.p25),
];

fn write(path: &Path, content: &str) -> Result<(), CliError> {
    std::fs::write(path, content).map_err(|source| CliError::Write {
        path: path.to_path_buf(),
        source,
    })
}

/// Reference and estimated x-y positions of the KF and MCC-KF logs, one row
/// per step after `burn_in`.
pub fn trajectory_csv(
    kf: &EpisodeLog<f64>,
    mcckf: &EpisodeLog<f64>,
    burn_in: usize,
) -> Result<String, CliError> {
    if kf.len() != mcckf.len() {
        return Err(CliError::Usage(format!(
            "trajectory logs are not aligned: {} vs {} steps",
            kf.len(),
            mcckf.len()
        )));
    }
    let mut out = String::with_capacity(kf.len().saturating_sub(burn_in) * 96);
    out.push_str(TRAJECTORY_HEADER);
    out.push('\n');
    for (a, b) in kf.steps.iter().zip(&mcckf.steps).skip(burn_in) {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            a.reference.x,
            a.reference.y,
            a.estimate[0],
            a.estimate[1],
            b.estimate[0],
            b.estimate[1]
        );
    }
    Ok(out)
}

pub fn emit_trajectory_csv(
    kf: &EpisodeLog<f64>,
    mcckf: &EpisodeLog<f64>,
    burn_in: usize,
    path: &Path,
) -> Result<(), CliError> {
    write(path, &trajectory_csv(kf, mcckf, burn_in)?)
}

fn cell(
    table: &StatsTable<f64>,
    f: FilterKind,
    axis: usize,
    row: fn(&Summary<f64>) -> f64,
) -> String {
    match table.get(f).and_then(|r| r.summary) {
        Some(s) => format!("{:.4}", row(if axis == 0 { &s.x } else { &s.y })),
        None => "n/a".into(),
    }
}

fn title(scenario: Scenario) -> &'static str {
    match scenario {
        Scenario::Continuous => "Estimation error with Non-intermittent Measurements (m)",
        Scenario::Intermittent => "Estimation error with Intermittent Measurements (m)",
    }
}

/// Aligned text table: one column pair (x, y) per filter.
pub fn stats_text(table: &StatsTable<f64>, scenario: Scenario) -> String {
    let filters: Vec<FilterKind> = table.rows.iter().map(|r| r.filter).collect();
    let mut out = String::new();
    let _ = writeln!(out, "{}", title(scenario));
    let _ = write!(out, "{:<10}", "");
    for f in &filters {
        let _ = write!(out, "  {:<18}", f.label());
    }
    out.push('\n');
    let _ = write!(out, "{:<10}", "");
    for _ in &filters {
        let _ = write!(out, "  {:<8}  {:<8}", "x", "y");
    }
    out.push('\n');
    for (label, row) in ROWS {
        let _ = write!(out, "{label:<10}");
        for f in &filters {
            let _ = write!(
                out,
                "  {:<8}  {:<8}",
                cell(table, *f, 0, row),
                cell(table, *f, 1, row)
            );
        }
        out.push('\n');
    }
    let _ = write!(out, "runs: {}", table.runs);
    let failed: Vec<String> = table
        .rows
        .iter()
        .filter(|r| r.failures > 0)
        .map(|r| format!("{} {}", r.filter.key(), r.failures))
        .collect();
    if failed.is_empty() {
        out.push('\n');
    } else {
        let _ = writeln!(out, "; aborted runs excluded: {}", failed.join(", "));
    }
    out
}

/// Same values as [`stats_text`], plus a row of failure counts.
pub fn stats_csv(table: &StatsTable<f64>) -> String {
    let mut out = String::from("stat");
    for r in &table.rows {
        let _ = write!(out, ",{0}-x,{0}-y", r.filter.key());
    }
    out.push('\n');
    for (label, row) in ROWS {
        out.push_str(label);
        for r in &table.rows {
            let _ = write!(
                out,
                ",{},{}",
                cell(table, r.filter, 0, row),
                cell(table, r.filter, 1, row)
            );
        }
        out.push('\n');
    }
    out.push_str("failures");
    for r in &table.rows {
        let _ = write!(out, ",{0},{0}", r.failures);
    }
    out.push('\n');
    out
}

pub fn emit_stats(
    table: &StatsTable<f64>,
    scenario: Scenario,
    text: Option<&Path>,
    csv: Option<&Path>,
) -> Result<(), CliError> {
    if let Some(p) = text {
        write(p, &stats_text(table, scenario))?;
    }
    if let Some(p) = csv {
        write(p, &stats_csv(table))?;
    }
    Ok(())
}
