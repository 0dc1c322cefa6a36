use serde::{Deserialize, Serialize};

use super::{BackendError, ForecastBackend};
use crate::field::{FieldError, FieldSet};
use crate::perturb::VariableStats;
use crate::trajectory::timestep;

/// Toy linear dynamics: zonal advection by a whole number of cells followed by
/// relaxation toward a per-variable reference mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurrogateParams {
    /// Eastward shift per step in grid cells (negative moves west).
    pub advect_cells_lon: i64,
    /// Fraction of the deviation from the reference mean removed per step.
    pub relax_rate: f64,
}

impl SurrogateParams {
    pub fn validate(&self) -> Result<(), BackendError> {
        if !(0.0..=1.0).contains(&self.relax_rate) {
            return Err(BackendError::Invalid(format!("relax_rate must be in [0, 1], got {}", self.relax_rate)));
        }
        Ok(())
    }
}

/// Advances `state` by one step: circular eastward shift of every latitude row,
/// then `v <- (1 - r) v + r * mean`.
pub fn surrogate_step(
    state: &FieldSet,
    params: &SurrogateParams,
    reference_means: &VariableStats,
) -> Result<FieldSet, BackendError> {
    params.validate()?;
    let grid = state.grid();
    let (rows, cols) = (grid.lat_count(), grid.lon_count());
    let shift = params.advect_cells_lon.rem_euclid(cols as i64) as usize;
    let keep = 1.0 - params.relax_rate;
    let mut values = Vec::with_capacity(state.values().len());
    for c in 0..state.catalog().len() {
        let pull = params.relax_rate * reference_means.get(c).mean;
        let channel = state.channel(c);
        for i in 0..rows {
            let row = &channel[i * cols..(i + 1) * cols];
            // out[j] = row[j - shift]
            for j in 0..cols {
                let src = row[(j + cols - shift) % cols];
                values.push((keep * src as f64 + pull) as f32);
            }
        }
    }
    FieldSet::new(*grid, state.valid_time() + timestep(), values).map_err(|e| match e {
        FieldError::NonFinite { .. } => BackendError::NonFiniteState,
        other => BackendError::BadOutput(other.to_string()),
    })
}

#[derive(Debug, Clone)]
pub struct SurrogateBackend {
    params: SurrogateParams,
    reference: VariableStats,
}

impl SurrogateBackend {
    pub fn new(params: SurrogateParams, reference: &VariableStats) -> Result<Self, BackendError> {
        params.validate()?;
        Ok(SurrogateBackend { params, reference: reference.clone() })
    }
}

impl ForecastBackend for SurrogateBackend {
    fn step(&self, state: &FieldSet) -> Result<FieldSet, BackendError> {
        surrogate_step(state, &self.params, &self.reference)
    }

    fn describe(&self) -> String {
        format!("surrogate(advect_cells_lon={}, relax_rate={})", self.params.advect_cells_lon, self.params.relax_rate)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use crate::perturb::ChannelStats;
    use chrono::{TimeZone, Utc};

    fn grid() -> GridSpec {
        GridSpec::new(1_000_000, 3, 8).unwrap()
    }

    fn t0() -> chrono::DateTime<Utc> {
        Utc.with_ymd_and_hms(2018, 9, 13, 0, 0, 0).unwrap()
    }

    fn means(m: f64) -> VariableStats {
        VariableStats::new(vec![ChannelStats { mean: m, std: 1.0 }; 73]).unwrap()
    }

    #[test]
    fn full_relaxation_returns_means() {
        let fs = FieldSet::from_fn(grid(), t0(), |c, i, j| (c * 3 + i * 7 + j) as f32).unwrap();
        let out =
            surrogate_step(&fs, &SurrogateParams { advect_cells_lon: 3, relax_rate: 1.0 }, &means(101_325.0)).unwrap();
        assert!(out.values().iter().all(|&v| v == 101_325.0));
        assert_eq!(out.valid_time(), t0() + chrono::Duration::hours(6));
    }

    #[test]
    fn marked_cell_moves_east_and_wraps() {
        let fs = FieldSet::from_fn(grid(), t0(), |_, i, j| if i == 1 && j == 7 { 9.0 } else { 0.0 }).unwrap();
        let p = SurrogateParams { advect_cells_lon: 1, relax_rate: 0.0 };
        let out = surrogate_step(&fs, &p, &means(0.0)).unwrap();
        assert_eq!(out.get(5, 1, 0), 9.0);
        assert_eq!(out.get(5, 1, 7), 0.0);
        let out2 = surrogate_step(&out, &p, &means(0.0)).unwrap();
        assert_eq!(out2.get(5, 1, 1), 9.0);
        let west =
            surrogate_step(&fs, &SurrogateParams { advect_cells_lon: -1, relax_rate: 0.0 }, &means(0.0)).unwrap();
        assert_eq!(west.get(5, 1, 6), 9.0);
    }

    #[test]
    fn mean_field_is_fixed_point() {
        let fs = FieldSet::from_fn(grid(), t0(), |_, _, _| 101_325.0).unwrap();
        let out =
            surrogate_step(&fs, &SurrogateParams { advect_cells_lon: 2, relax_rate: 0.3 }, &means(101_325.0)).unwrap();
        assert_eq!(out.values(), fs.values());
    }

    #[test]
    fn deviation_norm_contracts_by_one_minus_rate() {
        let fs =
            FieldSet::from_fn(grid(), t0(), |c, i, j| 50.0 + ((c * 13 + i * 5 + j * 3) % 11) as f32 - 5.0).unwrap();
        let r = 0.3;
        let out = surrogate_step(&fs, &SurrogateParams { advect_cells_lon: 1, relax_rate: r }, &means(50.0)).unwrap();
        for c in 0..73 {
            let norm = |xs: &[f32]| xs.iter().map(|&v| (v as f64 - 50.0).powi(2)).sum::<f64>().sqrt();
            let (before, after) = (norm(fs.channel(c)), norm(out.channel(c)));
            assert!((after / before - (1.0 - r)).abs() < 1e-6 * (1.0 - r));
        }
    }
}
