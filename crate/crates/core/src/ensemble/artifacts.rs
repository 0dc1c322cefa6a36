//! Plot-ready CSV exports: summary rows and histogram edge/count pairs.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ExperimentError;
use crate::error_stats::DistributionSummary;

pub const SUMMARY_FILE: &str = "summary.csv";
pub const TRAJECTORY_FILE: &str = "trajectory.csv";

/// One row per (group, trial, timestep, mask, histogram range).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub group: String,
    pub trial: usize,
    pub seed: u64,
    pub timestep: usize,
    pub valid_time: String,
    pub mask: String,
    pub hist_range: f64,
    pub count: usize,
    pub mean: f64,
    pub std: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
    pub degenerate: bool,
    pub min: f64,
    pub p05: f64,
    pub p25: f64,
    pub median: f64,
    pub p75: f64,
    pub p95: f64,
    pub max: f64,
    pub within_range: f64,
}

impl SummaryRow {
    pub fn new(
        group: &str,
        trial: usize,
        seed: u64,
        timestep: usize,
        valid_time: String,
        mask: &str,
        s: &DistributionSummary,
    ) -> Self {
        let q = s.quantiles;
        SummaryRow {
            group: group.to_string(),
            trial,
            seed,
            timestep,
            valid_time,
            mask: mask.to_string(),
            hist_range: s.histogram.range,
            count: s.count,
            mean: s.mean,
            std: s.std,
            skewness: s.skewness,
            excess_kurtosis: s.excess_kurtosis,
            degenerate: s.degenerate,
            min: q.min,
            p05: q.p05,
            p25: q.p25,
            median: q.median,
            p75: q.p75,
            p95: q.p95,
            max: q.max,
            within_range: s.within_range,
        }
    }
}

fn csv_err(path: &Path, e: csv::Error) -> ExperimentError {
    ExperimentError::Config(format!("{}: {e}", path.display()))
}

pub fn write_summary_rows(path: &Path, rows: &[SummaryRow]) -> Result<(), ExperimentError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| ExperimentError::io(path, e))
}

pub fn read_summary_rows(path: &Path) -> Result<Vec<SummaryRow>, ExperimentError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    r.deserialize().map(|row| row.map_err(|e| csv_err(path, e))).collect()
}

/// File stem for one mask and histogram range, e.g. `hist_atlantic_pm7.5`.
pub fn histogram_stem(mask: &str, range: f64) -> String {
    format!("hist_{mask}_pm{range}")
}

/// Writes `<stem>_edges.csv` (one `edge` per line) and `<stem>_counts.csv`
/// (`timestep,b000,...,b100`, one line per time point). Returns both file names.
pub fn write_histograms(
    dir: &Path,
    stem: &str,
    per_timestep: &[&DistributionSummary],
) -> Result<[String; 2], ExperimentError> {
    let edges_name = format!("{stem}_edges.csv");
    let counts_name = format!("{stem}_counts.csv");
    let Some(first) = per_timestep.first() else {
        return Ok([edges_name, counts_name]);
    };
    let mut edges = String::from("edge\n");
    for e in &first.histogram.edges {
        edges.push_str(&format!("{e}\n"));
    }
    let path = dir.join(&edges_name);
    std::fs::write(&path, edges).map_err(|e| ExperimentError::io(&path, e))?;

    let mut counts = String::from("timestep");
    for b in 0..first.histogram.counts.len() {
        counts.push_str(&format!(",b{b:03}"));
    }
    counts.push('\n');
    for (k, s) in per_timestep.iter().enumerate() {
        counts.push_str(&k.to_string());
        for c in &s.histogram.counts {
            counts.push_str(&format!(",{c}"));
        }
        counts.push('\n');
    }
    let path = dir.join(&counts_name);
    std::fs::write(&path, counts).map_err(|e| ExperimentError::io(&path, e))?;
    Ok([edges_name, counts_name])
}
