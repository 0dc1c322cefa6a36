#![allow(dead_code)]

use std::path::{Path, PathBuf};

use wxperturb::field::FieldSet;
use wxperturb::grid::{GridSpec, LatLon};
use wxperturb::state_io::write_state;
use wxperturb::synthetic::{storm_series, Storm};

pub fn coarse_grid() -> GridSpec {
    GridSpec::global(2.0).unwrap()
}

/// A storm drifting west-northwest across the Atlantic box on the 2 degree grid.
pub fn truth(steps: usize) -> Vec<FieldSet> {
    let storm = Storm { center: LatLon::new(32.0, 286.0), ..Storm::default() };
    storm_series(&coarse_grid(), &storm, (0.5, -1.0), steps, 3).unwrap()
}

pub fn write_series(dir: &Path, states: &[FieldSet]) -> Vec<PathBuf> {
    std::fs::create_dir_all(dir).unwrap();
    states
        .iter()
        .enumerate()
        .map(|(k, s)| {
            let p = dir.join(format!("state_{k:03}.wxs"));
            write_state(&p, s).unwrap();
            p
        })
        .collect()
}

pub fn stub_backend() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/stub_backend.py")
}

pub fn python() -> Option<&'static str> {
    ["python3", "python"]
        .into_iter()
        .find(|p| std::process::Command::new(p).arg("--version").output().is_ok_and(|o| o.status.success()))
}

/// Command line for the stub in `mode`, or `None` when no Python is available.
pub fn stub_command(mode: &str) -> Option<Vec<String>> {
    let py = python()?;
    Some(vec![py.into(), stub_backend().display().to_string(), "--mode".into(), mode.into()])
}
