use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ExperimentError;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const SUMMARY_TABLE_FILE: &str = "summary.txt";
pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Noise,
    RandomIc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrialStatus {
    Ok,
    /// The forecast blew up (non-finite state); excluded from aggregates.
    Diverged,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub group_index: usize,
    /// Noise fraction (noise experiments) or distribution name (random-IC experiments).
    pub group: String,
    pub trial: usize,
    pub seed: u64,
    pub status: TrialStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mte_km: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failed_step: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    /// Paths relative to the output directory.
    pub artifacts: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupAggregate {
    pub group_index: usize,
    pub group: String,
    pub trials: usize,
    pub succeeded: usize,
    /// Diverged or failed trials left out of the statistics.
    pub excluded: usize,
    pub diverged: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_mte_km: Option<f64>,
    /// Population standard deviation over successful trials.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub std_mte_km: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub median_trial: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub median_seed: Option<u64>,
}

/// Wall-clock and placement details; everything outside this block is a
/// deterministic function of the configuration and inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunInfo {
    pub started_at: String,
    pub finished_at: String,
    pub elapsed_secs: f64,
    pub workers: usize,
    pub output_dir: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub experiment: ExperimentKind,
    pub config: serde_json::Value,
    pub trials: Vec<TrialRecord>,
    pub aggregates: Vec<GroupAggregate>,
    pub run_info: RunInfo,
}

impl Manifest {
    pub fn read(path: &Path) -> Result<Self, ExperimentError> {
        let text = std::fs::read_to_string(path).map_err(|e| ExperimentError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| ExperimentError::Config(format!("{}: {e}", path.display())))
    }

    pub fn write(&self, dir: &Path) -> Result<(), ExperimentError> {
        let json = serde_json::to_string_pretty(self).expect("manifest serializes");
        let path = dir.join(MANIFEST_FILE);
        std::fs::write(&path, json + "\n").map_err(|e| ExperimentError::io(&path, e))?;
        let path = dir.join(SUMMARY_TABLE_FILE);
        std::fs::write(&path, self.summary_table()).map_err(|e| ExperimentError::io(&path, e))
    }

    /// The manifest with wall-clock metadata blanked, for reproducibility comparisons.
    pub fn deterministic_part(&self) -> Manifest {
        let mut m = self.clone();
        m.run_info = RunInfo {
            started_at: String::new(),
            finished_at: String::new(),
            elapsed_secs: 0.0,
            workers: 0,
            output_dir: String::new(),
        };
        m
    }

    pub fn summary_table(&self) -> String {
        let mut s = String::new();
        let label = match self.experiment {
            ExperimentKind::Noise => "beta",
            ExperimentKind::RandomIc => "distribution",
        };
        let _ = writeln!(
            s,
            "{label:>12} {:>6} {:>6} {:>8} {:>8} {:>14} {:>14} {:>20}",
            "trials", "ok", "excluded", "diverged", "mean_mte_km", "std_mte_km", "median_seed"
        );
        let opt = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.3}"));
        for a in &self.aggregates {
            let _ = writeln!(
                s,
                "{:>12} {:>6} {:>6} {:>8} {:>8} {:>14} {:>14} {:>20}",
                a.group,
                a.trials,
                a.succeeded,
                a.excluded,
                a.diverged,
                opt(a.mean_mte_km),
                opt(a.std_mte_km),
                a.median_seed.map_or("-".to_string(), |v| v.to_string())
            );
        }
        s
    }
}
