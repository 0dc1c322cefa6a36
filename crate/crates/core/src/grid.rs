//! Regular latitude/longitude grids and rectangular regions.
//!
//! Latitude runs north to south starting at +90, longitude runs eastward
//! from 0 in `[0, 360)`. Coordinates are kept internally as integer
//! microdegrees so that region membership on grid points is exact.

use serde::{Deserialize, Serialize};

use crate::field::FieldError;

const MICRO: f64 = 1_000_000.0;
const DEG90: i64 = 90_000_000;
const DEG360: i64 = 360_000_000;

/// A geographic position in degrees (lat north, lon east in `[0, 360)`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatLon {
    pub lat: f64,
    pub lon: f64,
}

impl LatLon {
    /// Creates a position, normalizing west longitudes into `[0, 360)`.
    pub fn new(lat: f64, lon: f64) -> Self {
        LatLon { lat, lon: normalize_lon(lon) }
    }
}

/// Maps any longitude in degrees into `[0, 360)`.
pub fn normalize_lon(lon: f64) -> f64 {
    let l = lon.rem_euclid(360.0);
    if l >= 360.0 {
        0.0
    } else {
        l
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GridSpec {
    lat_count: usize,
    lon_count: usize,
    resolution_microdeg: u32,
}

impl GridSpec {
    /// A grid anchored at (90N, 0E). Counts may cover less than the globe.
    pub fn new(resolution_microdeg: u32, lat_count: usize, lon_count: usize) -> Result<Self, FieldError> {
        if resolution_microdeg == 0 || lat_count == 0 || lon_count == 0 {
            return Err(FieldError::BadGrid("zero resolution or empty dimension".into()));
        }
        let res = resolution_microdeg as i64;
        let max_lat = (2 * DEG90 / res + 1) as usize;
        let max_lon = (DEG360 / res) as usize;
        if lat_count > max_lat || lon_count > max_lon {
            return Err(FieldError::BadGrid(format!(
                "{lat_count}x{lon_count} exceeds the globe at {} deg",
                resolution_microdeg as f64 / MICRO
            )));
        }
        Ok(GridSpec { lat_count, lon_count, resolution_microdeg })
    }

    /// Full global grid at the given resolution; the resolution must divide 90 and 360.
    pub fn global(resolution_deg: f64) -> Result<Self, FieldError> {
        let res = (resolution_deg * MICRO).round();
        if !(res >= 1.0) || res > u32::MAX as f64 {
            return Err(FieldError::BadGrid(format!("invalid resolution {resolution_deg}")));
        }
        let res = res as i64;
        if DEG90 % res != 0 || DEG360 % res != 0 {
            return Err(FieldError::BadGrid(format!("resolution {resolution_deg} does not tile the globe")));
        }
        GridSpec::new(res as u32, (2 * DEG90 / res + 1) as usize, (DEG360 / res) as usize)
    }

    /// 0.25 degree global grid, 721 x 1440.
    pub fn quarter_degree() -> Self {
        GridSpec { lat_count: 721, lon_count: 1440, resolution_microdeg: 250_000 }
    }

    /// 1 degree global grid, 181 x 360.
    pub fn one_degree() -> Self {
        GridSpec { lat_count: 181, lon_count: 360, resolution_microdeg: 1_000_000 }
    }

    pub fn lat_count(&self) -> usize {
        self.lat_count
    }

    pub fn lon_count(&self) -> usize {
        self.lon_count
    }

    pub fn points(&self) -> usize {
        self.lat_count * self.lon_count
    }

    pub fn resolution(&self) -> f64 {
        self.resolution_microdeg as f64 / MICRO
    }

    pub fn resolution_microdeg(&self) -> u32 {
        self.resolution_microdeg
    }

    fn lat_micro(&self, i: usize) -> i64 {
        DEG90 - i as i64 * self.resolution_microdeg as i64
    }

    fn lon_micro(&self, j: usize) -> i64 {
        j as i64 * self.resolution_microdeg as i64
    }

    pub fn lat_of(&self, i: usize) -> f64 {
        self.lat_micro(i) as f64 / MICRO
    }

    pub fn lon_of(&self, j: usize) -> f64 {
        self.lon_micro(j) as f64 / MICRO
    }

    pub fn position(&self, i: usize, j: usize) -> LatLon {
        LatLon { lat: self.lat_of(i), lon: self.lon_of(j) }
    }

    /// Flat row-major offset of a grid point within one channel.
    pub fn offset(&self, i: usize, j: usize) -> usize {
        i * self.lon_count + j
    }
}

/// Closed lat/lon box. Longitudes are stored in `[0, 360]`; a box whose
/// `lon_min` exceeds `lon_max` wraps across the prime meridian.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub lat_min: f64,
    pub lat_max: f64,
    pub lon_min: f64,
    pub lon_max: f64,
}

impl Region {
    /// Builds a region; west (negative) longitudes are shifted by +360.
    /// A `lon_max` of exactly 360 is kept so that a full-globe box can be expressed.
    pub fn new(lat_min: f64, lat_max: f64, lon_min: f64, lon_max: f64) -> Result<Self, FieldError> {
        if !(lat_min < lat_max) {
            return Err(FieldError::BadRegion(format!("lat_min {lat_min} must be below lat_max {lat_max}")));
        }
        let norm = |l: f64| if l == 360.0 { 360.0 } else { normalize_lon(l) };
        let (lon_min, lon_max) = if lon_max - lon_min >= 360.0 { (0.0, 360.0) } else { (norm(lon_min), norm(lon_max)) };
        Ok(Region { lat_min, lat_max, lon_min, lon_max })
    }

    /// 30N-40N, 70W-90W.
    pub fn atlantic() -> Self {
        Region { lat_min: 30.0, lat_max: 40.0, lon_min: 270.0, lon_max: 290.0 }
    }

    pub fn global() -> Self {
        Region { lat_min: -90.0, lat_max: 90.0, lon_min: 0.0, lon_max: 360.0 }
    }

    fn contains_micro(&self, lat: i64, lon: i64) -> bool {
        let to = |d: f64| (d * MICRO).round() as i64;
        if lat < to(self.lat_min) || lat > to(self.lat_max) {
            return false;
        }
        let (lo, hi) = (to(self.lon_min), to(self.lon_max));
        if lo <= hi {
            lon >= lo && lon <= hi
        } else {
            lon >= lo || lon <= hi
        }
    }

    /// Whether grid point `(i, j)` lies inside the closed box.
    pub fn contains_point(&self, grid: &GridSpec, i: usize, j: usize) -> bool {
        self.contains_micro(grid.lat_micro(i), grid.lon_micro(j))
    }
}

/// All grid points inside `region`, in row-major order.
pub fn region_indices(grid: &GridSpec, region: &Region) -> Result<Vec<(usize, usize)>, FieldError> {
    let mut out = Vec::new();
    for i in 0..grid.lat_count() {
        for j in 0..grid.lon_count() {
            if region.contains_point(grid, i, j) {
                out.push((i, j));
            }
        }
    }
    if out.is_empty() {
        return Err(FieldError::EmptyRegion);
    }
    Ok(out)
}

/// Flat per-channel offsets of the points in `region` (or the whole grid).
pub fn mask_offsets(grid: &GridSpec, region: Option<&Region>) -> Result<Vec<usize>, FieldError> {
    match region {
        None => Ok((0..grid.points()).collect()),
        Some(r) => Ok(region_indices(grid, r)?.into_iter().map(|(i, j)| grid.offset(i, j)).collect()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_counts() {
        let g = GridSpec::global(0.25).unwrap();
        assert_eq!(g, GridSpec::quarter_degree());
        assert_eq!((g.lat_count(), g.lon_count()), (721, 1440));
        assert_eq!(GridSpec::global(1.0).unwrap(), GridSpec::one_degree());
        assert!(GridSpec::global(0.7).is_err());
    }

    #[test]
    fn coordinates() {
        let g = GridSpec::quarter_degree();
        assert_eq!(g.lat_of(0), 90.0);
        assert_eq!(g.lat_of(720), -90.0);
        assert_eq!(g.lon_of(1), 0.25);
        assert_eq!(g.lon_of(1439), 359.75);
    }

    #[test]
    fn atlantic_on_one_degree_grid() {
        let pts = region_indices(&GridSpec::one_degree(), &Region::atlantic()).unwrap();
        assert_eq!(pts.len(), 11 * 21);
        // row-major: first point is the northernmost, westernmost
        assert_eq!(pts[0], (50, 270));
        assert_eq!(*pts.last().unwrap(), (60, 290));
    }

    #[test]
    fn west_longitudes_are_normalized() {
        let r = Region::new(30.0, 40.0, -90.0, -70.0).unwrap();
        assert_eq!(r, Region::atlantic());
    }

    #[test]
    fn full_globe_box() {
        let g = GridSpec::one_degree();
        let r = Region::new(-90.0, 90.0, 0.0, 360.0).unwrap();
        assert_eq!(region_indices(&g, &r).unwrap().len(), g.points());
        assert_eq!(region_indices(&g, &Region::global()).unwrap().len(), g.points());
    }

    #[test]
    fn box_south_of_pole_is_empty() {
        let r = Region::new(-100.0, -95.0, 0.0, 10.0).unwrap();
        assert!(matches!(region_indices(&GridSpec::one_degree(), &r), Err(FieldError::EmptyRegion)));
    }

    #[test]
    fn wrapping_box() {
        let r = Region::new(0.0, 0.0 + 1.0, -2.0, 2.0).unwrap();
        let pts = region_indices(&GridSpec::one_degree(), &r).unwrap();
        // 2 lats x lons {358, 359, 0, 1, 2}
        assert_eq!(pts.len(), 10);
    }

    #[test]
    fn inverted_lat_rejected() {
        assert!(Region::new(40.0, 30.0, 0.0, 1.0).is_err());
    }
}
