//! Initial-condition perturbation: per-variable statistics, additive Gaussian
//! noise injection, and fully random initial conditions.
//!
//! Noise for variable `x` at every grid point is drawn from
//! `N(sign * alpha * mean_x, beta * std_x)` and added to the state. Random
//! states draw i.i.d. samples from a base distribution, standardize them with
//! the distribution's analytic mean and standard deviation, and rescale them to
//! each variable's mean and standard deviation.
//!
//! Every channel draws from its own ChaCha8 stream keyed by `(seed, channel)`,
//! so results do not depend on how channels are scheduled across threads.

use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, LogNormal, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::{VariableCatalog, CHANNEL_COUNT};
use crate::field::{FieldError, FieldSet};
use crate::grid::GridSpec;
use crate::moments::Moments;

/// Noise fractions tested by default for both bias and spread.
pub const CANONICAL_LEVELS: [f64; 7] = [0.0, 0.02, 0.05, 0.10, 0.20, 0.35, 0.50];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PerturbError {
    #[error("degenerate std for {variable}")]
    DegenerateStd { variable: String },
    #[error("stats must cover {CHANNEL_COUNT} variables, got {0}")]
    IncompleteStats(usize),
    #[error("bad noise spec: {0}")]
    BadNoiseSpec(String),
    #[error("bad distribution spec: {0}")]
    BadDistributionSpec(String),
    #[error("non-finite perturbation in channel {channel}")]
    NonFinitePerturbation { channel: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelStats {
    pub mean: f64,
    pub std: f64,
}

/// Per-variable mean and standard deviation, one entry per catalog channel.
#[derive(Debug, Clone, PartialEq)]
pub struct VariableStats {
    channels: Vec<ChannelStats>,
}

impl VariableStats {
    /// Requires exactly one entry per catalog variable with a positive, finite std.
    pub fn new(channels: Vec<ChannelStats>) -> Result<Self, PerturbError> {
        if channels.len() != CHANNEL_COUNT {
            return Err(PerturbError::IncompleteStats(channels.len()));
        }
        let catalog = VariableCatalog::standard();
        for (c, s) in channels.iter().enumerate() {
            if !(s.std > 0.0) || !s.std.is_finite() || !s.mean.is_finite() {
                return Err(PerturbError::DegenerateStd { variable: catalog.name(c).to_string() });
            }
        }
        Ok(VariableStats { channels })
    }

    pub fn channels(&self) -> &[ChannelStats] {
        &self.channels
    }

    pub fn get(&self, channel: usize) -> ChannelStats {
        self.channels[channel]
    }

    pub fn by_name(&self, name: &str) -> Option<ChannelStats> {
        VariableCatalog::standard().index_of(name).map(|c| self.channels[c])
    }
}

/// Per-channel moments accumulated in `f64`, without rejecting constant channels.
pub fn channel_moments(fs: &FieldSet) -> Vec<Moments> {
    (0..CHANNEL_COUNT).into_par_iter().map(|c| Moments::from_slice(fs.channel(c))).collect()
}

/// Population mean and standard deviation of every channel.
pub fn compute_stats(fs: &FieldSet) -> Result<VariableStats, PerturbError> {
    let channels = channel_moments(fs).iter().map(|m| ChannelStats { mean: m.mean(), std: m.std() }).collect();
    VariableStats::new(channels)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AlphaSign {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

impl AlphaSign {
    pub fn factor(self) -> f64 {
        match self {
            AlphaSign::Plus => 1.0,
            AlphaSign::Minus => -1.0,
        }
    }
}

impl FromStr for AlphaSign {
    type Err = PerturbError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "+" | "+1" | "1" | "plus" => Ok(AlphaSign::Plus),
            "-" | "-1" | "minus" => Ok(AlphaSign::Minus),
            _ => Err(PerturbError::BadNoiseSpec(format!("alpha sign must be +1 or -1, got {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub alpha: f64,
    pub alpha_sign: AlphaSign,
    pub beta: f64,
    pub seed: u64,
}

impl NoiseSpec {
    /// Zero-mean noise with standard deviation `beta * std_x`.
    pub fn zero_mean(beta: f64, seed: u64) -> Self {
        NoiseSpec { alpha: 0.0, alpha_sign: AlphaSign::Plus, beta, seed }
    }

    pub fn validate(&self) -> Result<(), PerturbError> {
        for (name, v) in [("alpha", self.alpha), ("beta", self.beta)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(PerturbError::BadNoiseSpec(format!("{name} out of range [0, 1]: {v}")));
            }
        }
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        self.alpha == 0.0 && self.beta == 0.0
    }
}

fn channel_rng(seed: u64, channel: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(channel as u64);
    rng
}

/// Adds independent Gaussian noise to every channel and grid point.
///
/// A spec with `alpha == beta == 0` returns an exact copy without touching the RNG.
pub fn inject_noise(fs: &FieldSet, stats: &VariableStats, spec: &NoiseSpec) -> Result<FieldSet, PerturbError> {
    spec.validate()?;
    if spec.is_zero() {
        return Ok(fs.clone());
    }
    let n = fs.grid().points();
    let mut values = fs.values().to_vec();
    values.par_chunks_mut(n).enumerate().for_each(|(c, chunk)| {
        let s = stats.get(c);
        let shift = spec.alpha_sign.factor() * spec.alpha * s.mean;
        let scale = spec.beta * s.std;
        let mut rng = channel_rng(spec.seed, c);
        for v in chunk.iter_mut() {
            let z: f64 = rng.sample(StandardNormal);
            *v = (*v as f64 + shift + scale * z) as f32;
        }
    });
    FieldSet::new(*fs.grid(), fs.valid_time(), values).map_err(|e| match e {
        FieldError::NonFinite { channel, .. } => PerturbError::NonFinitePerturbation { channel },
        other => unreachable!("shape preserved: {other}"),
    })
}

/// Base distribution for fully random initial conditions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum BaseDistribution {
    Chi2 { dof: f64 },
    Lognormal { mu: f64, sigma: f64 },
    Normal,
    Uniform,
}

impl BaseDistribution {
    /// The four distributions with their default shape parameters.
    pub fn defaults() -> [BaseDistribution; 4] {
        [
            BaseDistribution::Chi2 { dof: 4.0 },
            BaseDistribution::Lognormal { mu: 0.0, sigma: 1.0 },
            BaseDistribution::Normal,
            BaseDistribution::Uniform,
        ]
    }

    pub fn name(&self) -> &'static str {
        match self {
            BaseDistribution::Chi2 { .. } => "chi2",
            BaseDistribution::Lognormal { .. } => "lognormal",
            BaseDistribution::Normal => "normal",
            BaseDistribution::Uniform => "uniform",
        }
    }

    pub fn validate(&self) -> Result<(), PerturbError> {
        match *self {
            BaseDistribution::Chi2 { dof } if !(dof >= 1.0) || !dof.is_finite() => {
                Err(PerturbError::BadDistributionSpec(format!("chi2 needs dof >= 1, got {dof}")))
            }
            BaseDistribution::Lognormal { mu, sigma } if !mu.is_finite() || !(sigma > 0.0) || sigma > 10.0 => {
                Err(PerturbError::BadDistributionSpec(format!(
                    "lognormal needs finite mu and 0 < sigma <= 10, got mu={mu}, sigma={sigma}"
                )))
            }
            _ => Ok(()),
        }
    }

    /// Analytic mean and standard deviation.
    pub fn moments(&self) -> (f64, f64) {
        match *self {
            BaseDistribution::Chi2 { dof } => (dof, (2.0 * dof).sqrt()),
            BaseDistribution::Lognormal { mu, sigma } => {
                let s2 = sigma * sigma;
                let mean = (mu + s2 / 2.0).exp();
                let var = s2.exp_m1() * (2.0 * mu + s2).exp();
                (mean, var.sqrt())
            }
            BaseDistribution::Normal => (0.0, 1.0),
            BaseDistribution::Uniform => (0.5, (1.0f64 / 12.0).sqrt()),
        }
    }

    fn sampler(&self) -> Result<Sampler, PerturbError> {
        self.validate()?;
        let bad = |e: &dyn fmt::Display| PerturbError::BadDistributionSpec(e.to_string());
        Ok(match *self {
            BaseDistribution::Chi2 { dof } => Sampler::Chi2(ChiSquared::new(dof).map_err(|e| bad(&e))?),
            BaseDistribution::Lognormal { mu, sigma } => {
                Sampler::Lognormal(LogNormal::new(mu, sigma).map_err(|e| bad(&e))?)
            }
            BaseDistribution::Normal => Sampler::Normal,
            BaseDistribution::Uniform => Sampler::Uniform,
        })
    }
}

impl fmt::Display for BaseDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BaseDistribution {
    type Err = PerturbError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        BaseDistribution::defaults()
            .into_iter()
            .find(|d| d.name() == s.to_ascii_lowercase())
            .ok_or_else(|| PerturbError::BadDistributionSpec(format!("unsupported distribution: {s}")))
    }
}

enum Sampler {
    Chi2(ChiSquared<f64>),
    Lognormal(LogNormal<f64>),
    Normal,
    Uniform,
}

impl Sampler {
    fn draw<R: Rng>(&self, rng: &mut R) -> f64 {
        match self {
            Sampler::Chi2(d) => d.sample(rng),
            Sampler::Lognormal(d) => d.sample(rng),
            Sampler::Normal => rng.sample(StandardNormal),
            Sampler::Uniform => rng.random::<f64>(),
        }
    }
}

/// Draws `n` standardized samples (analytic mean removed, divided by analytic std).
pub fn standardized_samples(dist: &BaseDistribution, seed: u64, n: usize) -> Result<Vec<f64>, PerturbError> {
    let sampler = dist.sampler()?;
    let (m, s) = dist.moments();
    let mut rng = channel_rng(seed, 0);
    Ok((0..n).map(|_| (sampler.draw(&mut rng) - m) / s).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct RandomIcSpec {
    pub distribution: BaseDistribution,
    pub seed: u64,
    pub target: VariableStats,
}

/// A state of i.i.d. samples rescaled per variable to the target mean and std.
/// No physical bounds are imposed.
pub fn random_ic(grid: &GridSpec, valid_time: DateTime<Utc>, spec: &RandomIcSpec) -> Result<FieldSet, PerturbError> {
    let sampler = spec.distribution.sampler()?;
    let (base_mean, base_std) = spec.distribution.moments();
    let n = grid.points();
    let mut values = vec![0.0f32; CHANNEL_COUNT * n];
    values.par_chunks_mut(n).enumerate().for_each(|(c, chunk)| {
        let target = spec.target.get(c);
        let mut rng = channel_rng(spec.seed, c);
        for v in chunk.iter_mut() {
            let z = (sampler.draw(&mut rng) - base_mean) / base_std;
            *v = (target.mean + target.std * z) as f32;
        }
    });
    FieldSet::new(*grid, valid_time, values).map_err(|e| match e {
        FieldError::NonFinite { channel, .. } => PerturbError::NonFinitePerturbation { channel },
        other => unreachable!("shape preserved: {other}"),
    })
}
