//! A small noise-injection experiment: several noise levels, a few seeded
//! trials each, tracked and summarized into a manifest.
//!
//! cargo run --release --example ensemble_experiment [out_dir]

use std::path::PathBuf;

use wxperturb::ensemble::report::{format_timestep_table, timestep_table};
use wxperturb::ensemble::{run_experiment_with, ExperimentConfig};
use wxperturb::forecast::{BackendDescriptor, SurrogateParams};
use wxperturb::grid::{GridSpec, LatLon};
use wxperturb::perturb::compute_stats;
use wxperturb::synthetic::{storm_series, Storm};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("wx-noise"));
    let grid = GridSpec::global(2.0)?;
    let storm = Storm { center: LatLon::new(31.0, 287.0), ..Storm::default() };
    let truth = storm_series(&grid, &storm, (0.25, -0.75), 14, 1)?;

    let params = SurrogateParams { advect_cells_lon: 0, relax_rate: 0.05 };
    let mut cfg = ExperimentConfig::new(Vec::new(), BackendDescriptor::surrogate(params), &out);
    cfg.noise_levels = vec![0.0, 0.05, 0.20, 0.50];
    cfg.trials = 5;
    cfg.base_seed = 2018;
    let backend = cfg.backend.build(&compute_stats(&truth[0])?)?;

    let manifest = run_experiment_with(&cfg, &truth, backend.as_ref())?;
    print!("{}", manifest.summary_table());
    println!("\nmedian trials, Atlantic box:");
    print!("{}", format_timestep_table(&timestep_table(&manifest, &out, "atlantic", 7.5)?));
    println!("\nmanifest: {}", out.join("manifest.json").display());
    Ok(())
}
