//! Multi-variable atmospheric state snapshots.

use chrono::{DateTime, Utc};
use thiserror::Error;

use crate::catalog::{VariableCatalog, CHANNEL_COUNT};
use crate::grid::GridSpec;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FieldError {
    #[error("bad grid: {0}")]
    BadGrid(String),
    #[error("bad region: {0}")]
    BadRegion(String),
    #[error("empty region")]
    EmptyRegion,
    #[error("shape mismatch: expected {expected} values, got {actual}")]
    ShapeMismatch { expected: usize, actual: usize },
    #[error("non-finite value in channel {channel} at offset {offset}")]
    NonFinite { channel: usize, offset: usize },
    #[error("incompatible fieldsets")]
    Incompatible,
    #[error("unknown variable {0:?}")]
    UnknownVariable(String),
}

/// One atmospheric state: all catalog channels on one grid at one valid time.
///
/// Values are `f32` in native units, laid out `(channel, lat, lon)` row-major.
/// Every value is finite; constructors enforce it.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSet {
    grid: GridSpec,
    valid_time: DateTime<Utc>,
    values: Vec<f32>,
}

impl FieldSet {
    pub fn new(grid: GridSpec, valid_time: DateTime<Utc>, values: Vec<f32>) -> Result<Self, FieldError> {
        let expected = CHANNEL_COUNT * grid.points();
        if values.len() != expected {
            return Err(FieldError::ShapeMismatch { expected, actual: values.len() });
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(FieldError::NonFinite { channel: pos / grid.points(), offset: pos % grid.points() });
        }
        Ok(FieldSet { grid, valid_time, values })
    }

    /// Builds a state channel by channel from a per-point function.
    pub fn from_fn(
        grid: GridSpec,
        valid_time: DateTime<Utc>,
        mut f: impl FnMut(usize, usize, usize) -> f32,
    ) -> Result<Self, FieldError> {
        let mut values = Vec::with_capacity(CHANNEL_COUNT * grid.points());
        for c in 0..CHANNEL_COUNT {
            for i in 0..grid.lat_count() {
                for j in 0..grid.lon_count() {
                    values.push(f(c, i, j));
                }
            }
        }
        FieldSet::new(grid, valid_time, values)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn catalog(&self) -> &'static VariableCatalog {
        VariableCatalog::standard()
    }

    pub fn valid_time(&self) -> DateTime<Utc> {
        self.valid_time
    }

    pub fn with_valid_time(mut self, t: DateTime<Utc>) -> Self {
        self.valid_time = t;
        self
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f32> {
        self.values
    }

    pub fn channel(&self, c: usize) -> &[f32] {
        let n = self.grid.points();
        &self.values[c * n..(c + 1) * n]
    }

    pub fn channel_by_name(&self, name: &str) -> Result<&[f32], FieldError> {
        let c = self.catalog().index_of(name).ok_or_else(|| FieldError::UnknownVariable(name.to_string()))?;
        Ok(self.channel(c))
    }

    pub fn get(&self, c: usize, i: usize, j: usize) -> f32 {
        self.values[c * self.grid.points() + self.grid.offset(i, j)]
    }

    /// Same grid and channel layout.
    pub fn is_compatible(&self, other: &FieldSet) -> bool {
        self.grid == other.grid && self.values.len() == other.values.len()
    }
}

/// Elementwise `a - b` per channel. The result carries `a`'s valid time.
pub fn field_difference(a: &FieldSet, b: &FieldSet) -> Result<FieldSet, FieldError> {
    if !a.is_compatible(b) {
        return Err(FieldError::Incompatible);
    }
    let values = a.values.iter().zip(&b.values).map(|(x, y)| x - y).collect();
    FieldSet::new(a.grid, a.valid_time, values)
}

pub fn pa_to_hpa(pa: f64) -> f64 {
    pa / 100.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::MSL;
    use chrono::TimeZone;

    fn t0() -> DateTime<Utc> {
        Utc.with_ymd_and_hms(2018, 9, 13, 0, 0, 0).unwrap()
    }

    fn small() -> GridSpec {
        GridSpec::new(1_000_000, 3, 4).unwrap()
    }

    #[test]
    fn wrong_length_rejected() {
        let err = FieldSet::new(small(), t0(), vec![0.0; 10]).unwrap_err();
        assert_eq!(err, FieldError::ShapeMismatch { expected: 73 * 12, actual: 10 });
    }

    #[test]
    fn nan_rejected_with_location() {
        let mut v = vec![1.0; 73 * 12];
        v[12 * 6 + 5] = f32::NAN;
        let err = FieldSet::new(small(), t0(), v).unwrap_err();
        assert_eq!(err, FieldError::NonFinite { channel: 6, offset: 5 });
    }

    #[test]
    fn self_difference_is_zero() {
        let f = FieldSet::from_fn(small(), t0(), |c, i, j| (c * 100 + i * 10 + j) as f32).unwrap();
        let d = field_difference(&f, &f).unwrap();
        assert!(d.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn constant_msl_offset() {
        let msl = VariableCatalog::standard().index_of(MSL).unwrap();
        let f = FieldSet::from_fn(small(), t0(), |c, _, _| if c == msl { 101_325.0 } else { 1.0 }).unwrap();
        let t = FieldSet::from_fn(small(), t0(), |c, _, _| if c == msl { 101_300.0 } else { 1.0 }).unwrap();
        let d = field_difference(&f, &t).unwrap();
        assert!(d.channel(msl).iter().all(|&v| v == 25.0));
        assert!(d.channel(0).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn mismatched_grids() {
        let a = FieldSet::from_fn(small(), t0(), |_, _, _| 0.0).unwrap();
        let b = FieldSet::from_fn(GridSpec::new(1_000_000, 4, 3).unwrap(), t0(), |_, _, _| 0.0).unwrap();
        assert_eq!(field_difference(&a, &b), Err(FieldError::Incompatible));
    }

    #[test]
    fn pressure_conversion() {
        assert_eq!(pa_to_hpa(101_325.0), 1013.25);
        assert_eq!(pa_to_hpa(0.0), 0.0);
        assert_eq!(pa_to_hpa(-750.0), -7.5);
    }
}
