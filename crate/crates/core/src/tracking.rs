//! Storm-center tracking by minimum mean-sea-level pressure, and trajectory error.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::{VariableCatalog, MSL};
use crate::field::{FieldError, FieldSet};
use crate::forecast::ForecastRun;
use crate::grid::{region_indices, GridSpec, LatLon, Region};
use crate::trajectory::{TrackPoint, Trajectory, TrajectoryError};

pub const EARTH_RADIUS_KM: f64 = 6371.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrackError {
    #[error("no candidate points")]
    NoCandidates,
    #[error("unaligned trajectories: {0}")]
    Unaligned(String),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Trajectory(#[from] TrajectoryError),
    #[error("timestep {step}: {source}")]
    AtStep {
        step: usize,
        #[source]
        source: Box<TrackError>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackConfig {
    pub region: Region,
    /// When set, each step searches only within this distance of the previous center.
    #[serde(default)]
    pub continuity_radius_km: Option<f64>,
}

impl Default for TrackConfig {
    fn default() -> Self {
        TrackConfig { region: Region::atlantic(), continuity_radius_km: None }
    }
}

impl TrackConfig {
    pub fn validate(&self) -> Result<(), TrackError> {
        match self.continuity_radius_km {
            Some(r) if !(r > 0.0) => {
                Err(TrackError::Field(FieldError::BadRegion(format!("continuity radius must be positive, got {r}"))))
            }
            _ => Ok(()),
        }
    }
}

/// Haversine distance on a sphere of radius 6371 km.
pub fn great_circle_km(a: LatLon, b: LatLon) -> f64 {
    let (phi1, phi2) = (a.lat.to_radians(), b.lat.to_radians());
    let dphi = phi2 - phi1;
    let dlambda = (b.lon - a.lon).to_radians();
    let h = (dphi / 2.0).sin().powi(2) + phi1.cos() * phi2.cos() * (dlambda / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_KM * h.sqrt().min(1.0).asin()
}

/// Precomputed search points for one grid and config.
struct Search<'a> {
    grid: GridSpec,
    points: Vec<(usize, usize)>,
    cfg: &'a TrackConfig,
}

impl<'a> Search<'a> {
    fn new(grid: GridSpec, cfg: &'a TrackConfig) -> Result<Self, TrackError> {
        cfg.validate()?;
        let points = region_indices(&grid, &cfg.region).map_err(|e| match e {
            FieldError::EmptyRegion => TrackError::NoCandidates,
            other => TrackError::Field(other),
        })?;
        Ok(Search { grid, points, cfg })
    }

    fn locate(&self, msl: &[f32], prior: Option<LatLon>) -> Result<LatLon, TrackError> {
        let radius = self.cfg.continuity_radius_km.zip(prior);
        let mut best: Option<(f32, usize, usize)> = None;
        for &(i, j) in &self.points {
            if let Some((r, p)) = radius {
                if great_circle_km(p, self.grid.position(i, j)) > r {
                    continue;
                }
            }
            let v = msl[self.grid.offset(i, j)];
            if best.is_none_or(|(b, _, _)| v < b) {
                best = Some((v, i, j));
            }
        }
        let (_, i, j) = best.ok_or(TrackError::NoCandidates)?;
        Ok(self.grid.position(i, j))
    }
}

/// Grid point of minimum MSL inside the configured region; ties go to the
/// first point in row-major order.
pub fn locate_center(fs: &FieldSet, cfg: &TrackConfig, prior: Option<LatLon>) -> Result<LatLon, TrackError> {
    let msl = fs.channel(VariableCatalog::standard().index_of(MSL).expect("msl in catalog"));
    Search::new(*fs.grid(), cfg)?.locate(msl, prior)
}

/// Locates the center in every state, feeding each result forward as the next prior.
pub fn track_storm(run: &ForecastRun, cfg: &TrackConfig) -> Result<Trajectory, TrackError> {
    track_states(&run.states, cfg)
}

pub fn track_states(states: &[FieldSet], cfg: &TrackConfig) -> Result<Trajectory, TrackError> {
    let Some(first) = states.first() else {
        return Ok(Trajectory::default());
    };
    let search = Search::new(*first.grid(), cfg)?;
    let msl_channel = VariableCatalog::standard().index_of(MSL).expect("msl in catalog");
    let mut prior = None;
    let mut points = Vec::with_capacity(states.len());
    for (step, fs) in states.iter().enumerate() {
        if fs.grid() != first.grid() {
            return Err(TrackError::AtStep { step, source: Box::new(TrackError::Field(FieldError::Incompatible)) });
        }
        let center = search
            .locate(fs.channel(msl_channel), prior)
            .map_err(|e| TrackError::AtStep { step, source: Box::new(e) })?;
        points.push(TrackPoint { time: fs.valid_time(), lat: center.lat, lon: center.lon });
        prior = Some(center);
    }
    Ok(Trajectory::new(points)?)
}

/// Sum of great-circle distances between paired points divided by the number of points.
pub fn mean_trajectory_error(pred: &Trajectory, truth: &Trajectory) -> Result<f64, TrackError> {
    if pred.len() != truth.len() {
        return Err(TrackError::Unaligned(format!("lengths {} and {}", pred.len(), truth.len())));
    }
    if pred.is_empty() {
        return Err(TrackError::Unaligned("empty trajectories".into()));
    }
    let mut total = 0.0;
    for (k, (p, t)) in pred.points().iter().zip(truth.points()).enumerate() {
        if p.time != t.time {
            return Err(TrackError::Unaligned(format!("point {k}: {} vs {}", p.time, t.time)));
        }
        total += great_circle_km(p.position(), t.position());
    }
    Ok(total / pred.len() as f64)
}
