//! Writes a synthetic state and its statistics file, then reads both back.
//!
//! cargo run --example state_files [out_dir]

use std::path::PathBuf;

use wxperturb::grid::GridSpec;
use wxperturb::perturb::compute_stats;
use wxperturb::state_io::{read_state, read_stats, write_state, write_stats};
use wxperturb::synthetic::{storm_start, storm_state, Storm};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(std::env::temp_dir);
    std::fs::create_dir_all(&out)?;

    let grid = GridSpec::one_degree();
    let state = storm_state(&grid, storm_start(), &Storm::default(), 1)?;
    let path = out.join("florence_000.wxs");
    write_state(&path, &state)?;
    println!("wrote {} ({} bytes)", path.display(), std::fs::metadata(&path)?.len());

    let back = read_state(&path)?;
    assert_eq!(back, state);
    println!(
        "{}x{} grid, {} channels, valid {}",
        grid.lat_count(),
        grid.lon_count(),
        back.catalog().len(),
        back.valid_time()
    );

    let stats = compute_stats(&back)?;
    let stats_path = out.join("florence_000.stats.csv");
    write_stats(&stats_path, &stats)?;
    let reread = read_stats(&stats_path)?;
    for name in ["msl", "t2m", "z500", "rh850"] {
        let s = reread.by_name(name).unwrap();
        println!("{name:>6}  mean {:>12.3}  std {:>10.3}", s.mean, s.std);
    }
    Ok(())
}
