use chrono::{DateTime, Duration, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::LatLon;

/// Model timestep, fixed at six hours.
pub const TIMESTEP_HOURS: i64 = 6;

pub fn timestep() -> Duration {
    Duration::hours(TIMESTEP_HOURS)
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrajectoryError {
    #[error("trajectory point {index} is not 6 h after its predecessor")]
    BadSpacing { index: usize },
    #[error("malformed trajectory csv: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackPoint {
    pub time: DateTime<Utc>,
    pub lat: f64,
    pub lon: f64,
}

impl TrackPoint {
    pub fn position(&self) -> LatLon {
        LatLon { lat: self.lat, lon: self.lon }
    }
}

/// Storm-center positions at consecutive 6-hourly valid times.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    points: Vec<TrackPoint>,
}

impl Trajectory {
    pub fn new(points: Vec<TrackPoint>) -> Result<Self, TrajectoryError> {
        for (k, w) in points.windows(2).enumerate() {
            if w[1].time - w[0].time != timestep() {
                return Err(TrajectoryError::BadSpacing { index: k + 1 });
            }
        }
        Ok(Trajectory { points })
    }

    pub fn points(&self) -> &[TrackPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `time,lat,lon` with RFC 3339 times.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("time,lat,lon\n");
        for p in &self.points {
            s.push_str(&format!("{},{},{}\n", p.time.to_rfc3339(), p.lat, p.lon));
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self, TrajectoryError> {
        let mut lines = text.lines();
        match lines.next() {
            Some("time,lat,lon") => {}
            other => return Err(TrajectoryError::Malformed(format!("unexpected header {other:?}"))),
        }
        let mut points = Vec::new();
        for (n, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let bad = || TrajectoryError::Malformed(format!("line {}: {line:?}", n + 2));
            let mut parts = line.split(',');
            let (Some(t), Some(lat), Some(lon), None) = (parts.next(), parts.next(), parts.next(), parts.next()) else {
                return Err(bad());
            };
            let time = DateTime::parse_from_rfc3339(t).map_err(|_| bad())?.with_timezone(&Utc);
            points.push(TrackPoint {
                time,
                lat: lat.parse().map_err(|_| bad())?,
                lon: lon.parse().map_err(|_| bad())?,
            });
        }
        Trajectory::new(points)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;

    fn pt(h: i64, lat: f64, lon: f64) -> TrackPoint {
        TrackPoint { time: Utc.with_ymd_and_hms(2018, 9, 13, 0, 0, 0).unwrap() + Duration::hours(h), lat, lon }
    }

    #[test]
    fn spacing_enforced() {
        assert!(Trajectory::new(vec![pt(0, 1.0, 2.0), pt(6, 1.0, 2.0)]).is_ok());
        assert_eq!(
            Trajectory::new(vec![pt(0, 1.0, 2.0), pt(6, 1.0, 2.0), pt(6, 0.0, 0.0)]),
            Err(TrajectoryError::BadSpacing { index: 2 })
        );
    }

    #[test]
    fn csv_round_trip() {
        let t = Trajectory::new(vec![pt(0, 33.25, 285.5), pt(6, 33.5, 285.0), pt(12, -0.1, 0.3)]).unwrap();
        let csv = t.to_csv();
        assert!(csv.starts_with("time,lat,lon\n2018-09-13T00:00:00+00:00,33.25,285.5\n"));
        assert_eq!(Trajectory::from_csv(&csv).unwrap(), t);
    }
}
