//! Collation of a finished experiment into per-group MTE tables and
//! per-timestep summary tables of the median trials.

use std::fmt::Write as _;
use std::path::Path;

use super::artifacts::{read_summary_rows, SummaryRow, SUMMARY_FILE};
use super::manifest::{GroupAggregate, Manifest, TrialStatus};
use super::{aggregate_group, ExperimentError};

/// Aggregates recomputed from the trial records, one per group in manifest order.
pub fn mte_table(manifest: &Manifest) -> Vec<GroupAggregate> {
    manifest.aggregates.iter().map(|a| aggregate_group(a.group_index, &a.group, &manifest.trials)).collect()
}

pub fn mte_table_csv(rows: &[GroupAggregate]) -> String {
    let mut s =
        String::from("group,trials,succeeded,excluded,diverged,mean_mte_km,std_mte_km,median_trial,median_seed\n");
    let opt = |v: Option<f64>| v.map_or(String::new(), |v| v.to_string());
    for a in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{}",
            a.group,
            a.trials,
            a.succeeded,
            a.excluded,
            a.diverged,
            opt(a.mean_mte_km),
            opt(a.std_mte_km),
            a.median_trial.map_or(String::new(), |v| v.to_string()),
            a.median_seed.map_or(String::new(), |v| v.to_string())
        );
    }
    s
}

/// Per-timestep summary rows for each group's representative trial: the MTE
/// median when one exists, otherwise the first successful trial.
pub fn timestep_table(
    manifest: &Manifest,
    output_dir: &Path,
    mask: &str,
    hist_range: f64,
) -> Result<Vec<SummaryRow>, ExperimentError> {
    let mut out = Vec::new();
    for agg in mte_table(manifest) {
        let pick = agg.median_trial.or_else(|| {
            manifest
                .trials
                .iter()
                .find(|r| r.group_index == agg.group_index && r.status == TrialStatus::Ok)
                .map(|r| r.trial)
        });
        let Some(trial) = pick else { continue };
        let record = manifest
            .trials
            .iter()
            .find(|r| r.group_index == agg.group_index && r.trial == trial)
            .expect("picked from records");
        let Some(summary) = record.artifacts.iter().find(|a| a.ends_with(SUMMARY_FILE)) else {
            continue;
        };
        let rows = read_summary_rows(&output_dir.join(summary))?;
        out.extend(rows.into_iter().filter(|r| r.mask == mask && (r.hist_range - hist_range).abs() < 1e-12));
    }
    Ok(out)
}

pub fn format_timestep_table(rows: &[SummaryRow]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:>10} {:>5} {:>4} {:>10} {:>10} {:>9} {:>9} {:>10} {:>10} {:>10} {:>10} {:>10} {:>10} {:>10}",
        "group", "trial", "step", "mean", "std", "skew", "exkurt", "min", "p05", "p25", "median", "p75", "p95", "max"
    );
    for r in rows {
        let _ = writeln!(
            s,
            "{:>10} {:>5} {:>4} {:>10.4} {:>10.4} {:>9.4} {:>9.4} {:>10.4} {:>10.4} {:>10.4} {:>10.4} {:>10.4} {:>10.4} {:>10.4}",
            r.group, r.trial, r.timestep, r.mean, r.std, r.skewness, r.excess_kurtosis, r.min, r.p05, r.p25, r.median,
            r.p75, r.p95, r.max
        );
    }
    s
}
