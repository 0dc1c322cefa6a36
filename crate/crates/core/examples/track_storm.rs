//! Tracks the storm's MSL minimum through a truth series and a persistence
//! forecast, and reports the mean trajectory error.
//!
//! cargo run --release --example track_storm

use wxperturb::forecast::{rollout, SurrogateBackend, SurrogateParams};
use wxperturb::grid::{GridSpec, LatLon};
use wxperturb::perturb::compute_stats;
use wxperturb::synthetic::{storm_series, Storm};
use wxperturb::tracking::{mean_trajectory_error, track_states, track_storm, TrackConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let grid = GridSpec::one_degree();
    let storm = Storm { center: LatLon::new(31.0, 287.0), ..Storm::default() };
    let truth = storm_series(&grid, &storm, (0.25, -0.75), 14, 1)?;

    // Persistence: the storm stays where it started.
    let stats = compute_stats(&truth[0])?;
    let persistence = SurrogateBackend::new(SurrogateParams { advect_cells_lon: 0, relax_rate: 0.0 }, &stats)?;
    let run = rollout(&persistence, &truth[0], 14)?;

    let cfg = TrackConfig { continuity_radius_km: Some(500.0), ..TrackConfig::default() };
    let observed = track_states(&truth, &cfg)?;
    let predicted = track_storm(&run, &cfg)?;
    print!("{}", observed.to_csv());
    println!("mean trajectory error of persistence: {:.1} km", mean_trajectory_error(&predicted, &observed)?);
    Ok(())
}
