//! Experiment orchestration: noise levels x seeded trials through a backend,
//! with per-trial tracking and error statistics, aggregated into a manifest.

pub mod artifacts;
pub mod config;
pub mod manifest;
pub mod report;

use std::path::{Path, PathBuf};
use std::time::Instant;

use chrono::Utc;
use rayon::prelude::*;
use thiserror::Error;

use crate::error_stats::{series_over_time_ranges, DistributionSummary, StatsError};
use crate::field::FieldSet;
use crate::forecast::{rollout_with, BackendError, ForecastBackend, RolloutOptions};
use crate::perturb::{compute_stats, inject_noise, random_ic, NoiseSpec, PerturbError, RandomIcSpec, VariableStats};
use crate::state_io::{read_state, write_state, FormatError};
use crate::tracking::{mean_trajectory_error, track_states, TrackError};
use crate::trajectory::{timestep, Trajectory};

use artifacts::{histogram_stem, write_histograms, write_summary_rows, SummaryRow, SUMMARY_FILE, TRAJECTORY_FILE};
pub use config::{ExperimentConfig, LevelMode, MaskSpec, RandomIcSection};
pub use manifest::{ExperimentKind, GroupAggregate, Manifest, RunInfo, TrialRecord, TrialStatus};

pub const TRUTH_TRAJECTORY_FILE: &str = "truth_trajectory.csv";

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error(transparent)]
    Perturb(#[from] PerturbError),
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Track(#[from] TrackError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("all trials failed")]
    AllTrialsFailed,
}

impl ExperimentError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        ExperimentError::Io { path: path.to_path_buf(), source }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of trial `trial` in group `group`: `base ^ mix(group, trial)`.
///
/// `mix` is a bijection on the packed `(group << 32) | trial`, so seeds are
/// distinct within an experiment for fewer than 2^32 groups and trials.
pub fn derive_seed(base: u64, group: usize, trial: usize) -> u64 {
    base ^ splitmix64(((group as u64) << 32) | trial as u64)
}

/// The lower median of the successful trials by MTE; ties go to the smaller seed.
pub fn median_by_mte(records: &[TrialRecord]) -> Result<&TrialRecord, ExperimentError> {
    let mut ok: Vec<&TrialRecord> =
        records.iter().filter(|r| r.status == TrialStatus::Ok && r.mte_km.is_some()).collect();
    if ok.is_empty() {
        return Err(ExperimentError::AllTrialsFailed);
    }
    ok.sort_by(|a, b| a.mte_km.unwrap().total_cmp(&b.mte_km.unwrap()).then(a.seed.cmp(&b.seed)));
    Ok(ok[(ok.len() - 1) / 2])
}

/// Population mean and standard deviation.
pub fn mean_std(xs: &[f64]) -> Option<(f64, f64)> {
    if xs.is_empty() {
        return None;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    Some((mean, var.sqrt()))
}

/// Recomputes one aggregate row from the records of a group.
pub fn aggregate_group(group_index: usize, group: &str, records: &[TrialRecord]) -> GroupAggregate {
    let mine: Vec<TrialRecord> = records.iter().filter(|r| r.group_index == group_index).cloned().collect();
    let succeeded = mine.iter().filter(|r| r.status == TrialStatus::Ok).count();
    let diverged = mine.iter().filter(|r| r.status == TrialStatus::Diverged).count();
    let mtes: Vec<f64> = mine.iter().filter(|r| r.status == TrialStatus::Ok).filter_map(|r| r.mte_km).collect();
    let stats = mean_std(&mtes);
    let median = median_by_mte(&mine).ok();
    GroupAggregate {
        group_index,
        group: group.to_string(),
        trials: mine.len(),
        succeeded,
        excluded: mine.len() - succeeded,
        diverged,
        mean_mte_km: stats.map(|s| s.0),
        std_mte_km: stats.map(|s| s.1),
        median_trial: median.map(|r| r.trial),
        median_seed: median.map(|r| r.seed),
    }
}

pub fn load_truth(paths: &[PathBuf]) -> Result<Vec<FieldSet>, ExperimentError> {
    paths.iter().map(|p| read_state(p).map_err(ExperimentError::from)).collect()
}

fn check_truth(truth: &[FieldSet]) -> Result<(), ExperimentError> {
    if truth.len() < 2 {
        return Err(ExperimentError::Config(format!("truth series needs at least 2 states, got {}", truth.len())));
    }
    for (k, w) in truth.windows(2).enumerate() {
        if w[1].grid() != w[0].grid() {
            return Err(ExperimentError::Config(format!("truth state {} is on a different grid", k + 1)));
        }
        if w[1].valid_time() - w[0].valid_time() != timestep() {
            return Err(ExperimentError::Config(format!("truth state {} is not 6 h after its predecessor", k + 1)));
        }
    }
    Ok(())
}

enum TrialKind<'a> {
    Noise { beta: f64 },
    RandomIc { spec: &'a crate::perturb::BaseDistribution },
}

struct Job<'a> {
    group_index: usize,
    group: String,
    trial: usize,
    seed: u64,
    kind: TrialKind<'a>,
}

struct Context<'a> {
    cfg: &'a ExperimentConfig,
    truth: &'a [FieldSet],
    stats: VariableStats,
    backend: &'a dyn ForecastBackend,
    truth_track: Option<Trajectory>,
    masks: Vec<MaskSpec>,
}

struct TrialFailure {
    status: TrialStatus,
    step: Option<usize>,
    message: String,
}

impl<E: std::fmt::Display> From<E> for TrialFailure
where
    E: Into<ExperimentError>,
{
    fn from(e: E) -> Self {
        TrialFailure { status: TrialStatus::Failed, step: None, message: e.to_string() }
    }
}

fn trial_dir(group_index: usize, trial: usize) -> String {
    format!("group_{group_index:02}/trial_{trial:03}")
}

impl Context<'_> {
    fn run_job(&self, job: &Job) -> TrialRecord {
        let mut record = TrialRecord {
            group_index: job.group_index,
            group: job.group.clone(),
            trial: job.trial,
            seed: job.seed,
            status: TrialStatus::Ok,
            mte_km: None,
            failed_step: None,
            message: None,
            artifacts: Vec::new(),
        };
        match self.pipeline(job, &mut record.artifacts) {
            Ok(mte) => record.mte_km = mte,
            Err(f) => {
                record.status = f.status;
                record.failed_step = f.step;
                record.message = Some(f.message);
            }
        }
        record
    }

    fn pipeline(&self, job: &Job, artifacts: &mut Vec<String>) -> Result<Option<f64>, TrialFailure> {
        let reference = &self.truth[0];
        let ic = match &job.kind {
            TrialKind::Noise { beta } => inject_noise(
                reference,
                &self.stats,
                &NoiseSpec { alpha: self.cfg.alpha, alpha_sign: self.cfg.alpha_sign, beta: *beta, seed: job.seed },
            ),
            TrialKind::RandomIc { spec } => random_ic(
                reference.grid(),
                reference.valid_time(),
                &RandomIcSpec { distribution: **spec, seed: job.seed, target: self.stats.clone() },
            ),
        }
        .map_err(|e| match e {
            PerturbError::NonFinitePerturbation { .. } => {
                TrialFailure { status: TrialStatus::Diverged, step: Some(0), message: e.to_string() }
            }
            other => other.into(),
        })?;

        let steps = self.truth.len() - 1;
        let run = rollout_with(self.backend, &ic, steps, RolloutOptions { clamp: self.cfg.clamp }).map_err(|e| {
            TrialFailure {
                status: if e.diverged() { TrialStatus::Diverged } else { TrialStatus::Failed },
                step: Some(e.step),
                message: e.to_string(),
            }
        })?;

        let rel = trial_dir(job.group_index, job.trial);
        let dir = self.cfg.output_dir.join(&rel);
        std::fs::create_dir_all(&dir).map_err(|e| ExperimentError::io(&dir, e))?;

        let mut mte = None;
        if let Some(truth_track) = &self.truth_track {
            let track = track_states(&run.states, &self.cfg.track)?;
            mte = Some(mean_trajectory_error(&track, truth_track)?);
            let path = dir.join(TRAJECTORY_FILE);
            std::fs::write(&path, track.to_csv()).map_err(|e| ExperimentError::io(&path, e))?;
            artifacts.push(format!("{rel}/{TRAJECTORY_FILE}"));
        }

        let mut rows = Vec::new();
        for mask in &self.masks {
            let series: Vec<Vec<DistributionSummary>> = series_over_time_ranges(
                &run.states,
                self.truth,
                &self.cfg.variable,
                mask.region.as_ref(),
                &self.cfg.hist_ranges,
            )?;
            for (k, per_range) in series.iter().enumerate() {
                let time = run.states[k].valid_time().to_rfc3339();
                for s in per_range {
                    rows.push(SummaryRow::new(&job.group, job.trial, job.seed, k, time.clone(), &mask.name, s));
                }
            }
            for (r, &range) in self.cfg.hist_ranges.iter().enumerate() {
                let per_step: Vec<&DistributionSummary> = series.iter().map(|v| &v[r]).collect();
                for name in write_histograms(&dir, &histogram_stem(&mask.name, range), &per_step)? {
                    artifacts.push(format!("{rel}/{name}"));
                }
            }
        }
        write_summary_rows(&dir.join(SUMMARY_FILE), &rows)?;
        artifacts.push(format!("{rel}/{SUMMARY_FILE}"));

        if self.cfg.keep_states {
            let states_dir = dir.join("states");
            std::fs::create_dir_all(&states_dir).map_err(|e| ExperimentError::io(&states_dir, e))?;
            for (k, s) in run.states.iter().enumerate() {
                let name = format!("state_{k:03}.wxs");
                write_state(&states_dir.join(&name), s)?;
                artifacts.push(format!("{rel}/states/{name}"));
            }
        }
        Ok(mte)
    }
}

fn execute(
    cfg: &ExperimentConfig,
    kind: ExperimentKind,
    ctx: &Context,
    jobs: Vec<Job>,
    groups: Vec<String>,
) -> Result<Manifest, ExperimentError> {
    let started_at = Utc::now();
    let clock = Instant::now();
    let workers = cfg.worker_count();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| ExperimentError::Config(format!("worker pool: {e}")))?;
    let trials: Vec<TrialRecord> = pool.install(|| jobs.par_iter().map(|j| ctx.run_job(j)).collect());
    let aggregates = groups.iter().enumerate().map(|(g, name)| aggregate_group(g, name, &trials)).collect();
    let manifest = Manifest {
        format_version: manifest::MANIFEST_VERSION,
        experiment: kind,
        config: serde_json::to_value(cfg).expect("config serializes"),
        trials,
        aggregates,
        run_info: RunInfo {
            started_at: started_at.to_rfc3339(),
            finished_at: Utc::now().to_rfc3339(),
            elapsed_secs: clock.elapsed().as_secs_f64(),
            workers,
            output_dir: cfg.output_dir.display().to_string(),
        },
    };
    manifest.write(&cfg.output_dir)?;
    Ok(manifest)
}

fn prepare<'a>(
    cfg: &'a ExperimentConfig,
    truth: &'a [FieldSet],
    backend: &'a dyn ForecastBackend,
    track: bool,
) -> Result<Context<'a>, ExperimentError> {
    cfg.validate()?;
    check_truth(truth)?;
    std::fs::create_dir_all(&cfg.output_dir).map_err(|e| ExperimentError::io(&cfg.output_dir, e))?;
    let stats = compute_stats(&truth[0])?;
    let truth_track = if track {
        let t = track_states(truth, &cfg.track)?;
        let path = cfg.output_dir.join(TRUTH_TRAJECTORY_FILE);
        std::fs::write(&path, t.to_csv()).map_err(|e| ExperimentError::io(&path, e))?;
        Some(t)
    } else {
        None
    };
    let masks = if track { cfg.masks.clone() } else { vec![MaskSpec { name: "global".into(), region: None }] };
    Ok(Context { cfg, truth, stats, backend, truth_track, masks })
}

/// Noise-injection experiment: every level in `noise_levels` x `trials` seeds.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Manifest, ExperimentError> {
    cfg.validate()?;
    let truth = load_truth(&cfg.truth)?;
    check_truth(&truth)?;
    let backend = cfg.backend.build(&compute_stats(&truth[0])?)?;
    run_experiment_with(cfg, &truth, backend.as_ref())
}

/// As [`run_experiment`] with an in-memory truth series and backend.
pub fn run_experiment_with(
    cfg: &ExperimentConfig,
    truth: &[FieldSet],
    backend: &dyn ForecastBackend,
) -> Result<Manifest, ExperimentError> {
    let ctx = prepare(cfg, truth, backend, true)?;
    let groups: Vec<String> = cfg.noise_levels.iter().map(|b| b.to_string()).collect();
    let jobs = cfg
        .noise_levels
        .iter()
        .enumerate()
        .flat_map(|(g, &beta)| {
            (0..cfg.trials).map(move |t| Job {
                group_index: g,
                group: beta.to_string(),
                trial: t,
                seed: derive_seed(cfg.base_seed, g, t),
                kind: TrialKind::Noise { beta },
            })
        })
        .collect();
    execute(cfg, ExperimentKind::Noise, &ctx, jobs, groups)
}

/// Fully random initial conditions, one group per distribution; global statistics only, no tracking.
pub fn run_random_ic_experiment(cfg: &ExperimentConfig) -> Result<Manifest, ExperimentError> {
    cfg.validate()?;
    let truth = load_truth(&cfg.truth)?;
    check_truth(&truth)?;
    let backend = cfg.backend.build(&compute_stats(&truth[0])?)?;
    run_random_ic_experiment_with(cfg, &truth, backend.as_ref())
}

pub fn run_random_ic_experiment_with(
    cfg: &ExperimentConfig,
    truth: &[FieldSet],
    backend: &dyn ForecastBackend,
) -> Result<Manifest, ExperimentError> {
    let section = cfg.random_ic.clone().unwrap_or_default();
    let ctx = prepare(cfg, truth, backend, false)?;
    let groups: Vec<String> = section.distributions.iter().map(|d| d.name().to_string()).collect();
    let jobs = section
        .distributions
        .iter()
        .enumerate()
        .flat_map(|(g, dist)| {
            (0..cfg.trials).map(move |t| Job {
                group_index: g,
                group: dist.name().to_string(),
                trial: t,
                seed: derive_seed(cfg.base_seed, g, t),
                kind: TrialKind::RandomIc { spec: dist },
            })
        })
        .collect();
    execute(cfg, ExperimentKind::RandomIc, &ctx, jobs, groups)
}
