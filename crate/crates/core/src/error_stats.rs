//! Pixelwise forecast-minus-truth errors and their distributional summaries.
//!
//! Positive errors mean the forecast overestimates. MSL errors are reported
//! in hPa; every other variable keeps its native units. Statistics are
//! unweighted over grid points (no cos-latitude area weighting).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::{VariableCatalog, MSL};
use crate::field::{pa_to_hpa, FieldError, FieldSet};
use crate::forecast::ForecastRun;
use crate::grid::{mask_offsets, Region};
use crate::moments::Moments;

pub const HISTOGRAM_BINS: usize = 101;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("empty error field")]
    Empty,
    #[error("histogram range must be positive and finite, got {0}")]
    BadRange(f64),
    #[error("misaligned inputs: {0}")]
    Misaligned(String),
    #[error(transparent)]
    Field(#[from] FieldError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorField {
    pub variable: String,
    pub timestep: usize,
    pub mask: Option<Region>,
    pub values: Vec<f64>,
}

/// `forecast - truth` for one variable over `mask` (or the whole grid).
pub fn error_field(
    forecast: &FieldSet,
    truth: &FieldSet,
    variable: &str,
    mask: Option<&Region>,
) -> Result<ErrorField, StatsError> {
    if !forecast.is_compatible(truth) {
        return Err(StatsError::Field(FieldError::Incompatible));
    }
    if forecast.valid_time() != truth.valid_time() {
        return Err(StatsError::Misaligned(format!(
            "forecast valid at {}, truth at {}",
            forecast.valid_time(),
            truth.valid_time()
        )));
    }
    let c = VariableCatalog::standard()
        .index_of(variable)
        .ok_or_else(|| FieldError::UnknownVariable(variable.to_string()))?;
    let offsets = mask_offsets(forecast.grid(), mask)?;
    let (f, t) = (forecast.channel(c), truth.channel(c));
    let to_report: fn(f64) -> f64 = if variable == MSL { pa_to_hpa } else { |v| v };
    let values = offsets.iter().map(|&k| to_report(f[k] as f64 - t[k] as f64)).collect();
    Ok(ErrorField { variable: variable.to_string(), timestep: 0, mask: mask.copied(), values })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quantiles {
    pub min: f64,
    pub p05: f64,
    pub p25: f64,
    pub median: f64,
    pub p75: f64,
    pub p95: f64,
    pub max: f64,
}

impl Quantiles {
    pub fn as_array(&self) -> [f64; 7] {
        [self.min, self.p05, self.p25, self.median, self.p75, self.p95, self.max]
    }
}

/// 101 equal bins over `[-range, +range]`; out-of-range values land in the edge bins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub range: f64,
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn new(range: f64) -> Result<Self, StatsError> {
        if !(range > 0.0) || !range.is_finite() {
            return Err(StatsError::BadRange(range));
        }
        let width = 2.0 * range / HISTOGRAM_BINS as f64;
        let edges = (0..=HISTOGRAM_BINS).map(|k| -range + k as f64 * width).collect();
        Ok(Histogram { range, edges, counts: vec![0; HISTOGRAM_BINS] })
    }

    pub fn bin_of(&self, v: f64) -> usize {
        let width = 2.0 * self.range / HISTOGRAM_BINS as f64;
        let k = ((v + self.range) / width).floor();
        if k < 0.0 {
            0
        } else {
            (k as usize).min(HISTOGRAM_BINS - 1)
        }
    }

    pub fn add(&mut self, v: f64) {
        let k = self.bin_of(v);
        self.counts[k] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionSummary {
    pub count: usize,
    pub mean: f64,
    pub std: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
    /// Zero variance; skewness and kurtosis are reported as 0.
    pub degenerate: bool,
    pub quantiles: Quantiles,
    pub histogram: Histogram,
    /// Fraction of values with `|v| <= range`.
    pub within_range: f64,
}

/// Linear interpolation between order statistics at position `p * (n - 1)`.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = p * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn summarize(e: &ErrorField, hist_range: f64) -> Result<DistributionSummary, StatsError> {
    Ok(summarize_ranges(e, &[hist_range])?.remove(0))
}

/// One summary per histogram range; moments and quantiles are shared.
pub fn summarize_ranges(e: &ErrorField, ranges: &[f64]) -> Result<Vec<DistributionSummary>, StatsError> {
    if e.values.is_empty() {
        return Err(StatsError::Empty);
    }
    let moments = Moments::from_slice(&e.values);
    let mut sorted = e.values.clone();
    sorted.sort_unstable_by(f64::total_cmp);
    let quantiles = Quantiles {
        min: sorted[0],
        p05: quantile_sorted(&sorted, 0.05),
        p25: quantile_sorted(&sorted, 0.25),
        median: quantile_sorted(&sorted, 0.5),
        p75: quantile_sorted(&sorted, 0.75),
        p95: quantile_sorted(&sorted, 0.95),
        max: sorted[sorted.len() - 1],
    };
    let skewness = moments.skewness();
    let kurtosis = moments.excess_kurtosis();
    let degenerate = skewness.is_none();
    ranges
        .iter()
        .map(|&range| {
            let mut histogram = Histogram::new(range)?;
            let mut inside = 0usize;
            for &v in &e.values {
                histogram.add(v);
                if v.abs() <= range {
                    inside += 1;
                }
            }
            Ok(DistributionSummary {
                count: e.values.len(),
                mean: moments.mean(),
                std: moments.std(),
                skewness: skewness.unwrap_or(0.0),
                excess_kurtosis: kurtosis.unwrap_or(0.0),
                degenerate,
                quantiles,
                histogram,
                within_range: inside as f64 / e.values.len() as f64,
            })
        })
        .collect()
}

/// One summary per time point of `run` against the aligned `truth` states.
pub fn series_over_time(
    run: &ForecastRun,
    truth: &[FieldSet],
    variable: &str,
    mask: Option<&Region>,
    hist_range: f64,
) -> Result<Vec<DistributionSummary>, StatsError> {
    Ok(series_over_time_ranges(&run.states, truth, variable, mask, &[hist_range])?
        .into_iter()
        .map(|mut per_range| per_range.remove(0))
        .collect())
}

/// `result[k][r]` summarizes time point `k` with histogram range `ranges[r]`.
pub fn series_over_time_ranges(
    states: &[FieldSet],
    truth: &[FieldSet],
    variable: &str,
    mask: Option<&Region>,
    ranges: &[f64],
) -> Result<Vec<Vec<DistributionSummary>>, StatsError> {
    if states.len() != truth.len() {
        return Err(StatsError::Misaligned(format!("{} forecast states, {} truth states", states.len(), truth.len())));
    }
    states
        .par_iter()
        .zip(truth)
        .enumerate()
        .map(|(k, (f, t))| {
            let mut e = error_field(f, t, variable, mask)?;
            e.timestep = k;
            summarize_ranges(&e, ranges)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use chrono::{TimeZone, Utc};

    fn field(msl: f32) -> FieldSet {
        let t = Utc.with_ymd_and_hms(2018, 9, 13, 0, 0, 0).unwrap();
        FieldSet::from_fn(GridSpec::one_degree(), t, |c, _, _| if c == 6 { msl } else { 1.0 }).unwrap()
    }

    fn sample(values: Vec<f64>) -> ErrorField {
        ErrorField { variable: "x".into(), timestep: 0, mask: None, values }
    }

    #[test]
    fn identical_fields_give_zero_error() {
        let e = error_field(&field(101_325.0), &field(101_325.0), "msl", None).unwrap();
        assert_eq!(e.values.len(), 181 * 360);
        assert!(e.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn msl_offset_reported_in_hpa() {
        let e = error_field(&field(101_575.0), &field(101_325.0), "msl", None).unwrap();
        assert!(e.values.iter().all(|&v| v == 2.5));
        let under = error_field(&field(101_075.0), &field(101_325.0), "msl", None).unwrap();
        assert!(under.values.iter().all(|&v| v == -2.5));
    }

    #[test]
    fn atlantic_mask_count() {
        let e = error_field(&field(1.0), &field(1.0), "msl", Some(&Region::atlantic())).unwrap();
        assert_eq!(e.values.len(), 231);
    }

    #[test]
    fn unknown_variable() {
        let err = error_field(&field(1.0), &field(1.0), "cape", None).unwrap_err();
        assert_eq!(err, StatsError::Field(FieldError::UnknownVariable("cape".into())));
    }

    #[test]
    fn three_point_summary() {
        let s = summarize(&sample(vec![-1.0, 0.0, 1.0]), 7.5).unwrap();
        assert_eq!(s.mean, 0.0);
        assert!((s.std - (2.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(s.skewness, 0.0);
        assert!((s.excess_kurtosis + 1.5).abs() < 1e-12);
        assert_eq!(s.quantiles.median, 0.0);
        assert_eq!(s.quantiles.p25, -0.5);
        assert!(!s.degenerate);
    }

    #[test]
    fn zero_variance_is_flagged() {
        let s = summarize(&sample(vec![2.0; 10]), 1.0).unwrap();
        assert!(s.degenerate);
        assert_eq!((s.skewness, s.excess_kurtosis), (0.0, 0.0));
        assert_eq!(s.histogram.counts[HISTOGRAM_BINS - 1], 10);
        assert_eq!(s.within_range, 0.0);
    }

    #[test]
    fn empty_rejected() {
        assert_eq!(summarize(&sample(vec![]), 1.0), Err(StatsError::Empty));
    }

    #[test]
    fn histogram_edges_and_clamping() {
        let mut h = Histogram::new(7.5).unwrap();
        assert_eq!(h.edges.len(), 102);
        assert_eq!(h.edges[0], -7.5);
        assert!((h.edges[101] - 7.5).abs() < 1e-12);
        // zero sits at the center of the middle bin
        assert_eq!(h.bin_of(0.0), 50);
        assert_eq!(h.bin_of(-100.0), 0);
        assert_eq!(h.bin_of(100.0), 100);
        assert_eq!(h.bin_of(7.5), 100);
        h.add(-8.0);
        h.add(1e9);
        assert_eq!(h.total(), 2);
        assert!(Histogram::new(0.0).is_err());
    }
}
