//! Synthetic atmospheric states for examples and desk-scale experiments.
//!
//! Each channel is a smooth large-scale pattern around a climatological
//! value plus small-scale texture; MSL (and surface pressure) carry a
//! Gaussian depression marking a storm center.

use chrono::{DateTime, TimeZone, Utc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::catalog::{Level, VariableCatalog, CHANNEL_COUNT};
use crate::field::{FieldError, FieldSet};
use crate::grid::{GridSpec, LatLon};
use crate::tracking::great_circle_km;

/// 2018-09-13 00:00 UTC.
pub fn storm_start() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2018, 9, 13, 0, 0, 0).unwrap()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Storm {
    pub center: LatLon,
    /// Central pressure deficit in Pa.
    pub depth_pa: f64,
    /// e-folding radius in km.
    pub radius_km: f64,
}

impl Default for Storm {
    fn default() -> Self {
        Storm { center: LatLon::new(33.0, -77.0), depth_pa: 4000.0, radius_km: 250.0 }
    }
}

// (climatological value, large-scale amplitude) per variable.
fn climatology(name: &str, level: Level) -> (f64, f64) {
    let idx = |hpa: u16| crate::catalog::PRESSURE_LEVELS_HPA.iter().position(|&l| l == hpa).unwrap();
    match (name, level) {
        ("u10m", _) => (0.5, 6.0),
        ("u100m", _) => (0.8, 8.0),
        ("v10m", _) => (0.1, 4.0),
        ("v100m", _) => (0.1, 5.0),
        ("t2m", _) => (287.0, 22.0),
        ("sp", _) => (98_500.0, 3500.0),
        ("msl", _) => (101_200.0, 900.0),
        ("tcwv", _) => (24.0, 16.0),
        (n, Level::Pressure(hpa)) => {
            let k = idx(hpa);
            const Z: [f64; 13] = [
                20_600.0, 16_200.0, 13_600.0, 11_800.0, 10_400.0, 9200.0, 7200.0, 5600.0, 4200.0, 3000.0, 1500.0,
                780.0, 110.0,
            ];
            const T: [f64; 13] =
                [212.0, 206.0, 211.0, 217.0, 223.0, 230.0, 243.0, 253.0, 261.0, 268.0, 279.0, 284.0, 288.0];
            const RH: [f64; 13] = [6.0, 12.0, 25.0, 38.0, 45.0, 48.0, 47.0, 48.0, 52.0, 58.0, 68.0, 74.0, 78.0];
            match &n[..1] {
                "z" => (Z[k], 60.0 + 0.015 * Z[k]),
                "t" => (T[k], 8.0 + 0.04 * (T[k] - 200.0)),
                "u" => (6.0 + 8.0 * (1.0 - k as f64 / 12.0), 14.0),
                "v" => (0.0, 7.0),
                _ => (RH[k], 14.0 + 0.1 * RH[k]),
            }
        }
        _ => (0.0, 1.0),
    }
}

/// A textured state with a storm imprinted in MSL and surface pressure.
pub fn storm_state(
    grid: &GridSpec,
    valid_time: DateTime<Utc>,
    storm: &Storm,
    seed: u64,
) -> Result<FieldSet, FieldError> {
    let catalog = VariableCatalog::standard();
    let (rows, cols) = (grid.lat_count(), grid.lon_count());
    let n = grid.points();
    let lat_cos: Vec<f64> = (0..rows).map(|i| grid.lat_of(i).to_radians().cos()).collect();
    let lat_cos2: Vec<f64> = (0..rows).map(|i| (2.0 * grid.lat_of(i).to_radians()).cos()).collect();
    let mut deficit = vec![0.0f64; n];
    if storm.depth_pa != 0.0 {
        for i in 0..rows {
            for j in 0..cols {
                let d = great_circle_km(storm.center, grid.position(i, j));
                if d < 6.0 * storm.radius_km {
                    deficit[i * cols + j] = storm.depth_pa * (-(d / storm.radius_km).powi(2)).exp();
                }
            }
        }
    }

    let mut values = vec![0.0f32; CHANNEL_COUNT * n];
    values.par_chunks_mut(n).enumerate().for_each(|(c, chunk)| {
        let def = &catalog.entries()[c];
        let (base, amp) = climatology(&def.name, def.level);
        let wave = 2.0 + (c % 4) as f64;
        let phase = c as f64 * 0.7;
        let lon_term: Vec<f64> = (0..cols).map(|j| (wave * grid.lon_of(j).to_radians() + phase).sin()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(c as u64);
        let is_rh = def.name.starts_with(crate::catalog::RH_PREFIX);
        let storm_weight = match def.name.as_str() {
            "msl" => 1.0,
            "sp" => 0.9,
            _ => 0.0,
        };
        for i in 0..rows {
            for (j, lon) in lon_term.iter().enumerate() {
                let k = i * cols + j;
                let texture: f64 = rng.sample(StandardNormal);
                let mut v = base + amp * (0.6 * lat_cos2[i] + 0.4 * lat_cos[i] * lon) + 0.04 * amp * texture
                    - storm_weight * deficit[k];
                if is_rh {
                    v = v.clamp(0.5, 100.0);
                }
                chunk[k] = v as f32;
            }
        }
    });
    FieldSet::new(*grid, valid_time, values)
}

/// Truth states at `steps + 1` consecutive 6-hourly times from [`storm_start`],
/// with the storm center moving `drift` (degrees lat, degrees lon) per step
/// over a fixed background.
pub fn storm_series(
    grid: &GridSpec,
    storm: &Storm,
    drift: (f64, f64),
    steps: usize,
    seed: u64,
) -> Result<Vec<FieldSet>, FieldError> {
    (0..=steps)
        .map(|k| {
            let moved = Storm {
                center: LatLon::new(storm.center.lat + drift.0 * k as f64, storm.center.lon + drift.1 * k as f64),
                ..*storm
            };
            storm_state(grid, storm_start() + crate::trajectory::timestep() * k as i32, &moved, seed)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perturb::compute_stats;
    use crate::tracking::{locate_center, TrackConfig};

    #[test]
    fn series_follows_the_drift() {
        let g = GridSpec::global(2.0).unwrap();
        let storm = Storm { center: LatLon::new(32.0, 284.0), ..Storm::default() };
        let series = storm_series(&g, &storm, (0.0, -2.0), 3, 5).unwrap();
        assert_eq!(series.len(), 4);
        let t = crate::tracking::track_states(&series, &TrackConfig::default()).unwrap();
        let lons: Vec<f64> = t.points().iter().map(|p| p.lon).collect();
        assert_eq!(lons, vec![284.0, 282.0, 280.0, 278.0]);
    }

    #[test]
    fn storm_is_the_regional_minimum() {
        let fs = storm_state(&GridSpec::one_degree(), storm_start(), &Storm::default(), 1).unwrap();
        let c = locate_center(&fs, &TrackConfig::default(), None).unwrap();
        assert_eq!((c.lat, c.lon), (33.0, 283.0));
    }

    #[test]
    fn every_channel_has_spread() {
        let fs = storm_state(&GridSpec::one_degree(), storm_start(), &Storm::default(), 2).unwrap();
        let stats = compute_stats(&fs).unwrap();
        assert!(stats.channels().iter().all(|s| s.std > 0.0));
        let rh = fs.channel_by_name("rh500").unwrap();
        assert!(rh.iter().all(|v| (0.0..=100.0).contains(v)));
    }

    #[test]
    fn seeded() {
        let g = GridSpec::new(1_000_000, 10, 10).unwrap();
        let a = storm_state(&g, storm_start(), &Storm::default(), 3).unwrap();
        assert_eq!(a, storm_state(&g, storm_start(), &Storm::default(), 3).unwrap());
        assert_ne!(a, storm_state(&g, storm_start(), &Storm::default(), 4).unwrap());
    }
}
