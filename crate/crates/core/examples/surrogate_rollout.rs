//! Rolls a perturbed state through the surrogate model and shows the error
//! contracting as the model relaxes toward its climatology.
//!
//! cargo run --release --example surrogate_rollout

use wxperturb::error_stats::series_over_time;
use wxperturb::forecast::{rollout, SurrogateBackend, SurrogateParams};
use wxperturb::grid::GridSpec;
use wxperturb::perturb::{compute_stats, inject_noise, NoiseSpec};
use wxperturb::synthetic::{storm_start, storm_state, Storm};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let grid = GridSpec::one_degree();
    let ic = storm_state(&grid, storm_start(), &Storm::default(), 1)?;
    let stats = compute_stats(&ic)?;
    let model = SurrogateBackend::new(SurrogateParams { advect_cells_lon: 1, relax_rate: 0.25 }, &stats)?;

    let truth = rollout(&model, &ic, 14)?;
    let noisy = inject_noise(&ic, &stats, &NoiseSpec::zero_mean(0.5, 3))?;
    let run = rollout(&model, &noisy, 14)?;
    println!("backend: {}", run.backend);

    let series = series_over_time(&run, &truth.states, "msl", None, 7.5)?;
    for (k, s) in series.iter().enumerate() {
        println!(
            "{}  MSL error std {:>8.4} hPa  ({:.4} of initial)",
            run.states[k].valid_time().format("%Y-%m-%d %HZ"),
            s.std,
            s.std / series[0].std
        );
    }
    Ok(())
}
