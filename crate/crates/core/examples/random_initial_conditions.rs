//! Fully random initial conditions from each base distribution, rescaled to
//! reference statistics.
//!
//! cargo run --release --example random_initial_conditions

use wxperturb::catalog::VariableCatalog;
use wxperturb::grid::GridSpec;
use wxperturb::moments::Moments;
use wxperturb::perturb::{compute_stats, random_ic, BaseDistribution, RandomIcSpec};
use wxperturb::synthetic::{storm_start, storm_state, Storm};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let grid = GridSpec::one_degree();
    let reference = storm_state(&grid, storm_start(), &Storm::default(), 1)?;
    let target = compute_stats(&reference)?;
    let catalog = VariableCatalog::standard();
    let rh50 = catalog.index_of("rh50").unwrap();

    println!("{:>10} {:>10} {:>10} {:>8} {:>8} {:>12}", "dist", "mean/μ", "std/σ", "skew", "exkurt", "rh50 < 0");
    for dist in BaseDistribution::defaults() {
        let fs =
            random_ic(&grid, storm_start(), &RandomIcSpec { distribution: dist, seed: 7, target: target.clone() })?;
        let c = catalog.index_of("t2m").unwrap();
        let m = Moments::from_slice(fs.channel(c));
        let negative = fs.channel(rh50).iter().filter(|&&v| v < 0.0).count();
        println!(
            "{:>10} {:>10.4} {:>10.4} {:>8.3} {:>8.3} {:>12}",
            dist.name(),
            m.mean() / target.get(c).mean,
            m.std() / target.get(c).std,
            m.skewness().unwrap_or(0.0),
            m.excess_kurtosis().unwrap_or(0.0),
            negative
        );
    }
    Ok(())
}
