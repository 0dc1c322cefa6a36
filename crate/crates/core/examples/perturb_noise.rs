//! Gaussian noise at each canonical noise level and its empirical size.
//!
//! cargo run --release --example perturb_noise

use wxperturb::catalog::VariableCatalog;
use wxperturb::grid::GridSpec;
use wxperturb::moments::Moments;
use wxperturb::perturb::{compute_stats, inject_noise, AlphaSign, NoiseSpec, CANONICAL_LEVELS};
use wxperturb::synthetic::{storm_start, storm_state, Storm};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let grid = GridSpec::one_degree();
    let ic = storm_state(&grid, storm_start(), &Storm::default(), 1)?;
    let stats = compute_stats(&ic)?;
    let msl = VariableCatalog::standard().index_of("msl").unwrap();
    let sigma = stats.get(msl).std;

    println!("{:>6} {:>14} {:>14}", "beta", "noise std/σ", "noise mean/σ");
    for &beta in &CANONICAL_LEVELS {
        let out = inject_noise(&ic, &stats, &NoiseSpec::zero_mean(beta, 2018))?;
        let noise: Vec<f64> =
            out.channel(msl).iter().zip(ic.channel(msl)).map(|(&a, &b)| a as f64 - b as f64).collect();
        let m = Moments::from_slice(&noise);
        println!("{beta:>6} {:>14.4} {:>14.5}", m.std() / sigma, m.mean() / sigma);
    }

    // A biased perturbation: the mean shifts by -alpha times the variable's mean.
    let spec = NoiseSpec { alpha: 0.001, alpha_sign: AlphaSign::Minus, beta: 0.0, seed: 1 };
    let out = inject_noise(&ic, &stats, &spec)?;
    let shift = Moments::from_slice(out.channel(msl)).mean() - Moments::from_slice(ic.channel(msl)).mean();
    println!("alpha = -0.001 shifts mean MSL by {shift:.1} Pa");
    Ok(())
}
