//! Drives an out-of-process model through the exchange-directory protocol,
//! using the identity stub shipped with the tests.
//!
//! cargo run --example external_backend

use wxperturb::forecast::{rollout, ExternalBackend, ExternalCommand};
use wxperturb::grid::GridSpec;
use wxperturb::synthetic::{storm_start, storm_state, Storm};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let stub = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/stub_backend.py");
    let command = ExternalCommand {
        command: vec!["python3".into(), stub.into(), "--mode".into(), "identity".into()],
        workdir: None,
        timeout_secs: 60,
    };
    let model = ExternalBackend::new(command)?;

    let ic = storm_state(&GridSpec::global(2.0)?, storm_start(), &Storm::default(), 1)?;
    let run = rollout(&model, &ic, 4)?;
    for s in &run.states {
        println!("{}  unchanged: {}", s.valid_time(), s.values() == ic.values());
    }
    Ok(())
}
