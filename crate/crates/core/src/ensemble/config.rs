//! Experiment configuration, read from TOML.
//!
//! ```toml
//! truth = ["truth/state_000.wxs", "truth/state_001.wxs"]   # relative to this file
//! output_dir = "runs/noise"
//! noise_levels = [0.0, 0.05, 0.20, 0.50]
//! level_mode = "canonical"        # or "explicit" for any beta in [0, 1]
//! trials = 30
//! base_seed = 2018
//! alpha = 0.0
//! alpha_sign = "+"
//! variable = "msl"
//! hist_ranges = [7.5, 15.0]
//! clamp = false
//! keep_states = false
//!
//! [backend]
//! kind = "surrogate"              # or kind = "external", command = [...]
//! advect_cells_lon = 1
//! relax_rate = 0.25
//!
//! [track]
//! region = { lat_min = 30.0, lat_max = 40.0, lon_min = 270.0, lon_max = 290.0 }
//!
//! [[masks]]
//! name = "atlantic"
//! region = { lat_min = 30.0, lat_max = 40.0, lon_min = 270.0, lon_max = 290.0 }
//!
//! [[masks]]
//! name = "global"
//!
//! [random_ic]
//! distributions = ["chi2", "lognormal", "normal", { kind = "chi2", dof = 8.0 }]
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::ExperimentError;
use crate::catalog::VariableCatalog;
use crate::forecast::BackendDescriptor;
use crate::grid::Region;
use crate::perturb::{AlphaSign, BaseDistribution, CANONICAL_LEVELS};
use crate::tracking::TrackConfig;

/// Environment variable holding the default worker count.
pub const WORKERS_ENV: &str = "WXPERTURB_WORKERS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LevelMode {
    /// Only the seven canonical fractions are accepted.
    #[default]
    Canonical,
    /// Any fraction in [0, 1].
    Explicit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskSpec {
    pub name: String,
    /// Absent for the whole globe.
    #[serde(default)]
    pub region: Option<Region>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
enum DistributionEntry {
    Name(String),
    Full(BaseDistribution),
}

fn de_distributions<'de, D: serde::Deserializer<'de>>(d: D) -> Result<Vec<BaseDistribution>, D::Error> {
    let entries = Vec::<DistributionEntry>::deserialize(d)?;
    entries
        .into_iter()
        .map(|e| match e {
            DistributionEntry::Name(n) => n.parse().map_err(serde::de::Error::custom),
            DistributionEntry::Full(b) => Ok(b),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomIcSection {
    #[serde(deserialize_with = "de_distributions", default = "default_distributions")]
    pub distributions: Vec<BaseDistribution>,
}

impl Default for RandomIcSection {
    fn default() -> Self {
        RandomIcSection { distributions: default_distributions() }
    }
}

fn default_distributions() -> Vec<BaseDistribution> {
    BaseDistribution::defaults().to_vec()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Truth states at consecutive 6-hourly times; the first is the reference initial condition.
    pub truth: Vec<PathBuf>,
    #[serde(default, skip_serializing)]
    pub output_dir: PathBuf,
    #[serde(default = "default_levels")]
    pub noise_levels: Vec<f64>,
    #[serde(default)]
    pub level_mode: LevelMode,
    #[serde(default)]
    pub alpha: f64,
    #[serde(default = "default_sign")]
    pub alpha_sign: AlphaSign,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub base_seed: u64,
    pub backend: BackendDescriptor,
    #[serde(default)]
    pub track: TrackConfig,
    #[serde(default = "default_variable")]
    pub variable: String,
    #[serde(default = "default_masks")]
    pub masks: Vec<MaskSpec>,
    #[serde(default = "default_ranges")]
    pub hist_ranges: Vec<f64>,
    #[serde(default)]
    pub clamp: bool,
    #[serde(default)]
    pub keep_states: bool,
    #[serde(default)]
    pub random_ic: Option<RandomIcSection>,
    /// Worker pool size; falls back to `WXPERTURB_WORKERS`, then to the CPU count.
    #[serde(default, skip_serializing)]
    pub workers: Option<usize>,
}

fn default_levels() -> Vec<f64> {
    CANONICAL_LEVELS.to_vec()
}

fn default_sign() -> AlphaSign {
    AlphaSign::Plus
}

fn default_trials() -> usize {
    30
}

fn default_variable() -> String {
    crate::catalog::MSL.to_string()
}

pub fn default_masks() -> Vec<MaskSpec> {
    vec![
        MaskSpec { name: "atlantic".into(), region: Some(Region::atlantic()) },
        MaskSpec { name: "global".into(), region: None },
    ]
}

fn default_ranges() -> Vec<f64> {
    vec![7.5, 15.0]
}

fn is_canonical(v: f64) -> bool {
    CANONICAL_LEVELS.iter().any(|c| (c - v).abs() <= 1e-12)
}

/// Checks a noise fraction against the level mode.
pub fn validate_level(name: &str, v: f64, mode: LevelMode) -> Result<(), ExperimentError> {
    if !(0.0..=1.0).contains(&v) {
        return Err(ExperimentError::Config(format!("{name} out of range [0, 1]: {v}")));
    }
    if mode == LevelMode::Canonical && !is_canonical(v) {
        return Err(ExperimentError::Config(format!(
            "{name} {v} is not one of the canonical levels {CANONICAL_LEVELS:?}; set level_mode = \"explicit\""
        )));
    }
    Ok(())
}

impl ExperimentConfig {
    /// A surrogate-free skeleton with defaults; callers fill in truth and backend.
    pub fn new(truth: Vec<PathBuf>, backend: BackendDescriptor, output_dir: impl Into<PathBuf>) -> Self {
        ExperimentConfig {
            truth,
            output_dir: output_dir.into(),
            noise_levels: default_levels(),
            level_mode: LevelMode::Canonical,
            alpha: 0.0,
            alpha_sign: AlphaSign::Plus,
            trials: default_trials(),
            base_seed: 0,
            backend,
            track: TrackConfig::default(),
            variable: default_variable(),
            masks: default_masks(),
            hist_ranges: default_ranges(),
            clamp: false,
            keep_states: false,
            random_ic: None,
            workers: None,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, ExperimentError> {
        toml::from_str(text).map_err(|e| ExperimentError::Config(e.to_string()))
    }

    /// Loads a config file, resolving relative paths against its directory.
    pub fn load(path: &Path) -> Result<Self, ExperimentError> {
        let text = std::fs::read_to_string(path).map_err(|e| ExperimentError::io(path, e))?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &Path| if p.is_relative() { base.join(p) } else { p.to_path_buf() };
        cfg.truth = cfg.truth.iter().map(|p| resolve(p)).collect();
        if !cfg.output_dir.as_os_str().is_empty() {
            cfg.output_dir = resolve(&cfg.output_dir);
        }
        Ok(cfg)
    }

    pub fn worker_count(&self) -> usize {
        self.workers
            .or_else(|| std::env::var(WORKERS_ENV).ok().and_then(|v| v.parse().ok()))
            .filter(|&w| w > 0)
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let err = |m: String| Err(ExperimentError::Config(m));
        if self.trials == 0 {
            return err("trials must be at least 1".into());
        }
        if self.output_dir.as_os_str().is_empty() {
            return err("output_dir is required".into());
        }
        if self.noise_levels.is_empty() {
            return err("noise_levels is empty".into());
        }
        for &b in &self.noise_levels {
            validate_level("beta", b, self.level_mode)?;
        }
        validate_level("alpha", self.alpha, self.level_mode)?;
        if VariableCatalog::standard().index_of(&self.variable).is_none() {
            return err(format!("unknown variable {:?}", self.variable));
        }
        if self.masks.is_empty() {
            return err("at least one mask is required".into());
        }
        for (k, m) in self.masks.iter().enumerate() {
            if m.name.is_empty() || !m.name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
                return err(format!("mask name {:?} must be non-empty [A-Za-z0-9_-]", m.name));
            }
            if self.masks[..k].iter().any(|o| o.name == m.name) {
                return err(format!("duplicate mask name {:?}", m.name));
            }
        }
        if self.hist_ranges.is_empty() || self.hist_ranges.iter().any(|r| !(*r > 0.0) || !r.is_finite()) {
            return err("hist_ranges must be non-empty and positive".into());
        }
        self.backend.validate().map_err(|e| ExperimentError::Config(e.to_string()))?;
        self.track.validate().map_err(|e| ExperimentError::Config(e.to_string()))?;
        if let Some(r) = &self.random_ic {
            if r.distributions.is_empty() {
                return err("random_ic.distributions is empty".into());
            }
            for d in &r.distributions {
                d.validate().map_err(|e| ExperimentError::Config(e.to_string()))?;
            }
        }
        Ok(())
    }
}
