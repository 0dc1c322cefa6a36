//! Quantile and moment series of the MSL error over the Atlantic box, with a
//! text rendering of the final histogram.
//!
//! cargo run --release --example error_distribution

use wxperturb::error_stats::series_over_time;
use wxperturb::forecast::{rollout, SurrogateBackend, SurrogateParams};
use wxperturb::grid::{GridSpec, LatLon, Region};
use wxperturb::perturb::{compute_stats, inject_noise, NoiseSpec};
use wxperturb::synthetic::{storm_series, Storm};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let grid = GridSpec::one_degree();
    let storm = Storm { center: LatLon::new(31.0, 287.0), ..Storm::default() };
    let truth = storm_series(&grid, &storm, (0.25, -0.75), 14, 1)?;
    let stats = compute_stats(&truth[0])?;
    let model = SurrogateBackend::new(SurrogateParams { advect_cells_lon: 0, relax_rate: 0.1 }, &stats)?;
    let ic = inject_noise(&truth[0], &stats, &NoiseSpec::zero_mean(0.05, 11))?;
    let run = rollout(&model, &ic, 14)?;

    let series = series_over_time(&run, &truth, "msl", Some(&Region::atlantic()), 7.5)?;
    println!(
        "{:>4} {:>8} {:>8} {:>8} {:>8} {:>8} {:>8} {:>8} {:>8} {:>8}",
        "step", "min", "p05", "median", "p95", "max", "mean", "std", "skew", "exkurt"
    );
    for (k, s) in series.iter().enumerate() {
        let q = s.quantiles;
        println!(
            "{k:>4} {:>8.2} {:>8.2} {:>8.2} {:>8.2} {:>8.2} {:>8.2} {:>8.2} {:>8.2} {:>8.2}",
            q.min, q.p05, q.median, q.p95, q.max, s.mean, s.std, s.skewness, s.excess_kurtosis
        );
    }

    let last = &series[14].histogram;
    let peak = *last.counts.iter().max().unwrap_or(&1) as f64;
    println!("\nerror histogram at step 14 (hPa, ±{} range, every 5th bin):", last.range);
    for (b, &c) in last.counts.iter().enumerate().step_by(5) {
        println!("{:>7.2} {}", last.edges[b], "#".repeat((40.0 * c as f64 / peak).round() as usize));
    }
    Ok(())
}
