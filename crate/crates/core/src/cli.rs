//! `wxperturb` command-line interface.
//!
//! Exit codes: 0 success, 1 usage or validation error, 2 data error
//! (unreadable or invalid files), 3 backend failure.

use std::ffi::OsString;
use std::fmt;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use clap::{Args, Parser, Subcommand};

use crate::catalog::VariableCatalog;
use crate::ensemble::artifacts::{histogram_stem, write_histograms, write_summary_rows, SummaryRow, SUMMARY_FILE};
use crate::ensemble::report::{format_timestep_table, mte_table, mte_table_csv, timestep_table};
use crate::ensemble::{
    run_experiment, run_random_ic_experiment, ExperimentConfig, ExperimentError, Manifest, TrialStatus,
};
use crate::error_stats::{series_over_time_ranges, DistributionSummary};
use crate::forecast::{rollout_with, BackendDescriptor, ExternalCommand, RolloutOptions, SurrogateParams};
use crate::grid::{GridSpec, Region};
use crate::perturb::{
    channel_moments, compute_stats, inject_noise, random_ic, AlphaSign, BaseDistribution, ChannelStats, NoiseSpec,
    RandomIcSpec,
};
use crate::state_io::{read_state, read_stats, write_channel_stats, write_state};
use crate::synthetic::storm_start;
use crate::tracking::{mean_trajectory_error, track_states, TrackConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitCode {
    Success = 0,
    Usage = 1,
    Data = 2,
    Backend = 3,
}

#[derive(Debug)]
pub struct CliError {
    pub code: ExitCode,
    pub message: String,
}

impl CliError {
    fn usage(m: impl fmt::Display) -> Self {
        CliError { code: ExitCode::Usage, message: m.to_string() }
    }
    fn data(m: impl fmt::Display) -> Self {
        CliError { code: ExitCode::Data, message: m.to_string() }
    }
    fn backend(m: impl fmt::Display) -> Self {
        CliError { code: ExitCode::Backend, message: m.to_string() }
    }
}

impl From<ExperimentError> for CliError {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::Config(_) => CliError::usage(e),
            ExperimentError::Backend(_) => CliError::backend(e),
            _ => CliError::data(e),
        }
    }
}

type CliResult = Result<(), CliError>;

#[derive(Debug, Parser)]
#[command(
    name = "wxperturb",
    version,
    about = "Perturb initial conditions, roll out forecasts, and score storm tracks and error distributions"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Per-variable mean and standard deviation of a state.
    Stats(StatsArgs),
    /// Add Gaussian noise to a state.
    Perturb(PerturbArgs),
    /// Generate a fully random state scaled to reference statistics.
    Randomize(RandomizeArgs),
    /// Roll a state forward through a backend.
    Forecast(ForecastArgs),
    /// Track the storm center in forecast and truth states and report the mean trajectory error.
    Track(TrackArgs),
    /// Error distribution summaries and histograms of forecast minus truth.
    Evaluate(EvaluateArgs),
    /// Run a full experiment from a config file.
    Ensemble(EnsembleArgs),
    /// Collate a finished experiment into tables.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct PerturbArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Statistics file; computed from the input when omitted.
    #[arg(long)]
    pub stats: Option<PathBuf>,
    /// Noise standard deviation as a fraction of each variable's std.
    #[arg(long, allow_hyphen_values = true)]
    pub beta: f64,
    /// Noise mean as a fraction of each variable's mean.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub alpha: f64,
    #[arg(long, default_value = "+1", allow_hyphen_values = true)]
    pub alpha_sign: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct RandomizeArgs {
    /// chi2, lognormal, normal or uniform.
    #[arg(long)]
    pub dist: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub stats: PathBuf,
    /// Global grid resolution in degrees.
    #[arg(long, default_value_t = 0.25, conflicts_with = "like")]
    pub resolution: f64,
    /// Copy grid and valid time from an existing state.
    #[arg(long)]
    pub like: Option<PathBuf>,
    /// RFC 3339 valid time (default 2018-09-13T00:00:00Z).
    #[arg(long)]
    pub time: Option<String>,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct ForecastArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// surrogate or external.
    #[arg(long, default_value = "surrogate")]
    pub backend: String,
    #[arg(long, default_value_t = 14)]
    pub steps: usize,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Reference statistics for the surrogate's relaxation target (default: the input's).
    #[arg(long)]
    pub stats: Option<PathBuf>,
    #[arg(long, default_value_t = 1, allow_hyphen_values = true)]
    pub advect: i64,
    #[arg(long, default_value_t = 0.25)]
    pub relax: f64,
    /// External command line, split on whitespace; the exchange directory is appended.
    #[arg(long)]
    pub command: Option<String>,
    #[arg(long)]
    pub workdir: Option<PathBuf>,
    #[arg(long, default_value_t = 3600)]
    pub timeout: u64,
    /// Clamp relative humidity to [0, 100] after each step.
    #[arg(long)]
    pub clamp: bool,
}

#[derive(Debug, Args)]
pub struct TrackArgs {
    #[arg(long)]
    pub forecast_dir: PathBuf,
    #[arg(long)]
    pub truth_dir: PathBuf,
    /// atlantic, global, or lat_min,lat_max,lon_min,lon_max.
    #[arg(long, default_value = "atlantic", allow_hyphen_values = true)]
    pub region: String,
    #[arg(long)]
    pub radius_km: Option<f64>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub forecast_dir: PathBuf,
    #[arg(long)]
    pub truth_dir: PathBuf,
    #[arg(long, default_value = "msl")]
    pub variable: String,
    /// atlantic, global, or lat_min,lat_max,lon_min,lon_max.
    #[arg(long, default_value = "atlantic", allow_hyphen_values = true)]
    pub region: String,
    /// Symmetric histogram bound(s).
    #[arg(long = "range", default_values_t = [7.5])]
    pub ranges: Vec<f64>,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct EnsembleArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Run the random initial-condition experiment instead of noise injection.
    #[arg(long)]
    pub random_ic: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long, env = crate::ensemble::config::WORKERS_ENV)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub base_seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long, default_value = "atlantic")]
    pub mask: String,
    #[arg(long, default_value_t = 7.5)]
    pub range: f64,
    /// Where to write report CSVs (default: next to the manifest).
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

/// Parses arguments, runs the command, prints diagnostics, and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => ExitCode::Usage as i32,
            };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::Success as i32,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code as i32
        }
    }
}

pub fn dispatch(cmd: Command) -> CliResult {
    match cmd {
        Command::Stats(a) => cmd_stats(&a),
        Command::Perturb(a) => cmd_perturb(&a),
        Command::Randomize(a) => cmd_randomize(&a),
        Command::Forecast(a) => cmd_forecast(&a),
        Command::Track(a) => cmd_track(&a),
        Command::Evaluate(a) => cmd_evaluate(&a),
        Command::Ensemble(a) => cmd_ensemble(&a),
        Command::Report(a) => cmd_report(&a),
    }
}

fn parse_region(s: &str) -> Result<Option<Region>, CliError> {
    match s {
        "atlantic" => Ok(Some(Region::atlantic())),
        "global" => Ok(None),
        _ => {
            let parts: Vec<f64> = s
                .split(',')
                .map(|p| p.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|_| CliError::usage(format!("bad region {s:?}")))?;
            let [a, b, c, d] = parts[..] else {
                return Err(CliError::usage(format!("region needs lat_min,lat_max,lon_min,lon_max, got {s:?}")));
            };
            Region::new(a, b, c, d).map(Some).map_err(CliError::usage)
        }
    }
}

fn state_files(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| CliError::data(format!("{}: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "wxs"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(CliError::data(format!("{}: no .wxs files", dir.display())));
    }
    Ok(files)
}

fn read_dir_states(dir: &Path) -> Result<Vec<crate::field::FieldSet>, CliError> {
    state_files(dir)?.iter().map(|p| read_state(p).map_err(CliError::data)).collect()
}

pub fn cmd_stats(a: &StatsArgs) -> CliResult {
    let fs = read_state(&a.input).map_err(CliError::data)?;
    let catalog = VariableCatalog::standard();
    let channels: Vec<ChannelStats> =
        channel_moments(&fs).iter().map(|m| ChannelStats { mean: m.mean(), std: m.std() }).collect();
    for (c, s) in channels.iter().enumerate() {
        if !(s.std > 0.0) {
            eprintln!("warning: degenerate std for {} (constant channel)", catalog.name(c));
        }
    }
    write_channel_stats(&a.output, &channels).map_err(CliError::data)
}

pub fn cmd_perturb(a: &PerturbArgs) -> CliResult {
    for (name, v) in [("beta", a.beta), ("alpha", a.alpha)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(CliError::usage(format!("{name} out of range [0, 1]: {v}")));
        }
    }
    let alpha_sign: AlphaSign = a.alpha_sign.parse().map_err(CliError::usage)?;
    let fs = read_state(&a.input).map_err(CliError::data)?;
    let stats = match &a.stats {
        Some(p) => read_stats(p).map_err(CliError::data)?,
        None => compute_stats(&fs).map_err(CliError::data)?,
    };
    let spec = NoiseSpec { alpha: a.alpha, alpha_sign, beta: a.beta, seed: a.seed };
    let out = inject_noise(&fs, &stats, &spec).map_err(CliError::data)?;
    write_state(&a.output, &out).map_err(CliError::data)
}

pub fn cmd_randomize(a: &RandomizeArgs) -> CliResult {
    let distribution: BaseDistribution =
        a.dist.parse().map_err(|_| CliError::usage(format!("unsupported distribution: {}", a.dist)))?;
    let time_override = match &a.time {
        Some(t) => Some(
            DateTime::parse_from_rfc3339(t)
                .map_err(|e| CliError::usage(format!("bad --time {t:?}: {e}")))?
                .with_timezone(&Utc),
        ),
        None => None,
    };
    let (grid, like_time) = match &a.like {
        Some(p) => {
            let fs = read_state(p).map_err(CliError::data)?;
            (*fs.grid(), Some(fs.valid_time()))
        }
        None => (GridSpec::global(a.resolution).map_err(CliError::usage)?, None),
    };
    let valid_time = time_override.or(like_time).unwrap_or_else(storm_start);
    let target = read_stats(&a.stats).map_err(CliError::data)?;
    let fs =
        random_ic(&grid, valid_time, &RandomIcSpec { distribution, seed: a.seed, target }).map_err(CliError::data)?;
    write_state(&a.output, &fs).map_err(CliError::data)
}

pub fn cmd_forecast(a: &ForecastArgs) -> CliResult {
    if a.steps == 0 {
        return Err(CliError::usage("steps must be at least 1"));
    }
    let descriptor = match a.backend.as_str() {
        "surrogate" => {
            BackendDescriptor::surrogate(SurrogateParams { advect_cells_lon: a.advect, relax_rate: a.relax })
        }
        "external" => {
            let command: Vec<String> = a
                .command
                .as_deref()
                .ok_or_else(|| CliError::usage("--backend external needs --command"))?
                .split_whitespace()
                .map(String::from)
                .collect();
            BackendDescriptor::external(ExternalCommand {
                command,
                workdir: a.workdir.clone(),
                timeout_secs: a.timeout,
            })
        }
        other => return Err(CliError::usage(format!("unknown backend {other:?}"))),
    };
    descriptor.validate().map_err(CliError::usage)?;
    let ic = read_state(&a.input).map_err(CliError::data)?;
    let reference = match &a.stats {
        Some(p) => read_stats(p).map_err(CliError::data)?,
        None => compute_stats(&ic).map_err(CliError::data)?,
    };
    let backend = descriptor.build(&reference).map_err(CliError::backend)?;
    std::fs::create_dir_all(&a.out_dir).map_err(|e| CliError::data(format!("{}: {e}", a.out_dir.display())))?;
    let write_all = |states: &[crate::field::FieldSet]| -> CliResult {
        for (k, s) in states.iter().enumerate() {
            write_state(&a.out_dir.join(format!("state_{k:03}.wxs")), s).map_err(CliError::data)?;
        }
        Ok(())
    };
    match rollout_with(backend.as_ref(), &ic, a.steps, RolloutOptions { clamp: a.clamp }) {
        Ok(run) => write_all(&run.states),
        Err(e) => {
            write_all(&e.partial)?;
            Err(CliError::backend(format!("step {}: {}", e.step, e.source)))
        }
    }
}

pub fn cmd_track(a: &TrackArgs) -> CliResult {
    let region = parse_region(&a.region)?.unwrap_or_else(Region::global);
    let cfg = TrackConfig { region, continuity_radius_km: a.radius_km };
    cfg.validate().map_err(CliError::usage)?;
    let forecast = read_dir_states(&a.forecast_dir)?;
    let truth = read_dir_states(&a.truth_dir)?;
    let pred = track_states(&forecast, &cfg).map_err(CliError::data)?;
    let real = track_states(&truth, &cfg).map_err(CliError::data)?;
    let mte = mean_trajectory_error(&pred, &real).map_err(CliError::data)?;
    if let Some(dir) = &a.out_dir {
        std::fs::create_dir_all(dir).map_err(|e| CliError::data(format!("{}: {e}", dir.display())))?;
        for (name, t) in [("forecast_trajectory.csv", &pred), ("truth_trajectory.csv", &real)] {
            std::fs::write(dir.join(name), t.to_csv()).map_err(|e| CliError::data(format!("{name}: {e}")))?;
        }
    }
    println!("mte_km={mte}");
    Ok(())
}

pub fn cmd_evaluate(a: &EvaluateArgs) -> CliResult {
    let mask = parse_region(&a.region)?;
    if VariableCatalog::standard().index_of(&a.variable).is_none() {
        return Err(CliError::usage(format!("unknown variable {:?}", a.variable)));
    }
    if a.ranges.iter().any(|r| !(*r > 0.0)) {
        return Err(CliError::usage("--range must be positive"));
    }
    let forecast = read_dir_states(&a.forecast_dir)?;
    let truth = read_dir_states(&a.truth_dir)?;
    let series =
        series_over_time_ranges(&forecast, &truth, &a.variable, mask.as_ref(), &a.ranges).map_err(CliError::data)?;
    std::fs::create_dir_all(&a.out_dir).map_err(|e| CliError::data(format!("{}: {e}", a.out_dir.display())))?;
    let mask_name = if mask.is_none() { "global" } else { "region" };
    let mut rows = Vec::new();
    for (k, per_range) in series.iter().enumerate() {
        for s in per_range {
            rows.push(SummaryRow::new(&a.variable, 0, 0, k, forecast[k].valid_time().to_rfc3339(), mask_name, s));
        }
    }
    write_summary_rows(&a.out_dir.join(SUMMARY_FILE), &rows).map_err(CliError::data)?;
    for (r, &range) in a.ranges.iter().enumerate() {
        let per_step: Vec<&DistributionSummary> = series.iter().map(|v| &v[r]).collect();
        write_histograms(&a.out_dir, &histogram_stem(mask_name, range), &per_step).map_err(CliError::data)?;
    }
    Ok(())
}

pub fn cmd_ensemble(a: &EnsembleArgs) -> CliResult {
    let mut cfg = ExperimentConfig::load(&a.config).map_err(|e| match e {
        ExperimentError::Io { .. } => CliError::data(e),
        other => CliError::usage(other),
    })?;
    if let Some(out) = &a.out {
        cfg.output_dir = out.clone();
    }
    if let Some(t) = a.trials {
        cfg.trials = t;
    }
    if let Some(w) = a.workers {
        cfg.workers = Some(w);
    }
    if let Some(s) = a.base_seed {
        cfg.base_seed = s;
    }
    let manifest = if a.random_ic { run_random_ic_experiment(&cfg)? } else { run_experiment(&cfg)? };
    print!("{}", manifest.summary_table());
    for r in manifest.trials.iter().filter(|r| r.status != TrialStatus::Ok) {
        eprintln!(
            "warning: group {} trial {} {:?}: {}",
            r.group,
            r.trial,
            r.status,
            r.message.as_deref().unwrap_or("")
        );
    }
    if manifest.trials.iter().all(|r| r.status == TrialStatus::Failed) {
        return Err(CliError::backend("all trials failed"));
    }
    Ok(())
}

pub fn cmd_report(a: &ReportArgs) -> CliResult {
    let manifest = Manifest::read(&a.manifest).map_err(CliError::data)?;
    let base = a.manifest.parent().unwrap_or(Path::new(".")).to_path_buf();
    let out_dir = a.out_dir.clone().unwrap_or_else(|| base.clone());
    let table = mte_table(&manifest);
    let rows = timestep_table(&manifest, &base, &a.mask, a.range).map_err(CliError::data)?;
    std::fs::create_dir_all(&out_dir).map_err(|e| CliError::data(format!("{}: {e}", out_dir.display())))?;
    std::fs::write(out_dir.join("report_mte.csv"), mte_table_csv(&table)).map_err(CliError::data)?;
    write_summary_rows(&out_dir.join("report_timesteps.csv"), &rows).map_err(CliError::data)?;
    print!("{}", manifest.summary_table());
    println!();
    print!("{}", format_timestep_table(&rows));
    Ok(())
}
