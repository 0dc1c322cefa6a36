//! Forecasts launched from fully random initial conditions, one group per
//! base distribution, summarized over the globe.
//!
//! cargo run --release --example random_ic_experiment [out_dir]

use std::path::PathBuf;

use wxperturb::ensemble::artifacts::read_summary_rows;
use wxperturb::ensemble::{run_random_ic_experiment_with, ExperimentConfig};
use wxperturb::forecast::{BackendDescriptor, SurrogateParams};
use wxperturb::grid::GridSpec;
use wxperturb::perturb::compute_stats;
use wxperturb::synthetic::{storm_series, Storm};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("wx-random"));
    let grid = GridSpec::global(2.0)?;
    let truth = storm_series(&grid, &Storm::default(), (0.25, -0.75), 8, 1)?;

    let params = SurrogateParams { advect_cells_lon: 1, relax_rate: 0.25 };
    let mut cfg = ExperimentConfig::new(Vec::new(), BackendDescriptor::surrogate(params), &out);
    cfg.trials = 1;
    cfg.hist_ranges = vec![15.0];
    let backend = cfg.backend.build(&compute_stats(&truth[0])?)?;

    let manifest = run_random_ic_experiment_with(&cfg, &truth, backend.as_ref())?;
    for trial in &manifest.trials {
        let summary = trial.artifacts.iter().find(|a| a.ends_with("summary.csv")).unwrap();
        let rows = read_summary_rows(&out.join(summary))?;
        let (first, last) = (&rows[0], &rows[rows.len() - 1]);
        println!(
            "{:>10}: MSL error std {:>8.2} -> {:>6.2} hPa, skewness {:>6.2} -> {:>6.2}",
            trial.group, first.std, last.std, first.skewness, last.skewness
        );
    }
    Ok(())
}
