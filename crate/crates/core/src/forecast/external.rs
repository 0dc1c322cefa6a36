//! Exchange-directory protocol for out-of-process models.
//!
//! For every step the driver creates a fresh directory, writes `input.wxs`,
//! and runs the configured command with the directory path as its argument
//! (appended, or substituted for a literal `{dir}` argument). The command must
//! write `output.wxs` holding the state 6 h later and exit with status 0.
//! Its stdout and stderr go to `backend.log` in the same directory.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::{BackendError, ForecastBackend};
use crate::field::FieldSet;
use crate::state_io::{read_state, write_state, FormatError};
use crate::trajectory::timestep;

pub const INPUT_FILE: &str = "input.wxs";
pub const OUTPUT_FILE: &str = "output.wxs";
const LOG_FILE: &str = "backend.log";
const DIAGNOSTIC_BYTES: usize = 4096;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExternalCommand {
    /// Program followed by its arguments.
    pub command: Vec<String>,
    /// Parent for per-step exchange directories; the system temp dir if unset.
    #[serde(default)]
    pub workdir: Option<PathBuf>,
    #[serde(default = "default_timeout_secs")]
    pub timeout_secs: u64,
}

fn default_timeout_secs() -> u64 {
    3600
}

impl ExternalCommand {
    pub fn new(command: Vec<String>) -> Self {
        ExternalCommand { command, workdir: None, timeout_secs: default_timeout_secs() }
    }

    pub fn validate(&self) -> Result<(), BackendError> {
        if self.command.is_empty() || self.command[0].is_empty() {
            return Err(BackendError::Invalid("external backend needs a command".into()));
        }
        if self.timeout_secs == 0 {
            return Err(BackendError::Invalid("timeout must be positive".into()));
        }
        Ok(())
    }

    fn build(&self, dir: &Path) -> Command {
        let dir = dir.to_string_lossy();
        let mut args: Vec<String> = self.command[1..].iter().map(|a| a.replace("{dir}", &dir)).collect();
        if !self.command[1..].iter().any(|a| a.contains("{dir}")) {
            args.push(dir.into_owned());
        }
        let mut cmd = Command::new(&self.command[0]);
        cmd.args(args);
        cmd
    }
}

fn io_err(e: impl std::fmt::Display) -> BackendError {
    BackendError::Io(e.to_string())
}

fn tail(path: &Path) -> String {
    let bytes = fs::read(path).unwrap_or_default();
    let start = bytes.len().saturating_sub(DIAGNOSTIC_BYTES);
    String::from_utf8_lossy(&bytes[start..]).trim().to_string()
}

/// Runs one step of `descriptor` on `state` inside `dir`, which must exist and be empty.
pub fn step_in_dir(state: &FieldSet, descriptor: &ExternalCommand, dir: &Path) -> Result<FieldSet, BackendError> {
    descriptor.validate()?;
    write_state(&dir.join(INPUT_FILE), state).map_err(io_err)?;
    let log_path = dir.join(LOG_FILE);
    let log = fs::File::create(&log_path).map_err(io_err)?;
    let mut child = descriptor
        .build(dir)
        .stdin(Stdio::null())
        .stdout(log.try_clone().map_err(io_err)?)
        .stderr(log)
        .spawn()
        .map_err(|e| BackendError::ProcessFailed {
            code: None,
            diagnostics: format!("cannot start {:?}: {e}", descriptor.command[0]),
        })?;

    let timeout = Duration::from_secs(descriptor.timeout_secs);
    let started = Instant::now();
    let mut poll = Duration::from_millis(2);
    let status = loop {
        if let Some(status) = child.try_wait().map_err(io_err)? {
            break status;
        }
        if started.elapsed() >= timeout {
            let _ = child.kill();
            let _ = child.wait();
            return Err(BackendError::Timeout(timeout));
        }
        thread::sleep(poll);
        poll = (poll * 2).min(Duration::from_millis(100));
    };
    if !status.success() {
        return Err(BackendError::ProcessFailed { code: status.code(), diagnostics: tail(&log_path) });
    }

    let out_path = dir.join(OUTPUT_FILE);
    if !out_path.exists() {
        return Err(BackendError::BadOutput(format!("{OUTPUT_FILE} missing")));
    }
    let next = read_state(&out_path).map_err(|e| match e {
        FormatError::NonFiniteState => BackendError::NonFiniteState,
        other => BackendError::BadOutput(other.to_string()),
    })?;
    if next.grid() != state.grid() {
        return Err(BackendError::BadOutput(format!(
            "grid mismatch: {}x{} vs {}x{}",
            next.grid().lat_count(),
            next.grid().lon_count(),
            state.grid().lat_count(),
            state.grid().lon_count()
        )));
    }
    let expected = state.valid_time() + timestep();
    if next.valid_time() != expected {
        return Err(BackendError::BadOutput(format!("valid_time {} (expected {expected})", next.valid_time())));
    }
    Ok(next)
}

/// Runs one step in a fresh exchange directory that is removed afterwards.
pub fn external_step(state: &FieldSet, descriptor: &ExternalCommand) -> Result<FieldSet, BackendError> {
    let mut builder = tempfile::Builder::new();
    builder.prefix("wxs-exchange-");
    let dir = match &descriptor.workdir {
        Some(parent) => {
            fs::create_dir_all(parent).map_err(io_err)?;
            builder.tempdir_in(parent)
        }
        None => builder.tempdir(),
    }
    .map_err(io_err)?;
    step_in_dir(state, descriptor, dir.path())
}

#[derive(Debug, Clone)]
pub struct ExternalBackend {
    command: ExternalCommand,
}

impl ExternalBackend {
    pub fn new(command: ExternalCommand) -> Result<Self, BackendError> {
        command.validate()?;
        Ok(ExternalBackend { command })
    }
}

impl ForecastBackend for ExternalBackend {
    fn step(&self, state: &FieldSet) -> Result<FieldSet, BackendError> {
        external_step(state, &self.command)
    }

    fn describe(&self) -> String {
        format!("external({})", self.command.command.join(" "))
    }
}

#[cfg(all(test, unix))]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use chrono::{TimeZone, Utc};

    fn state() -> FieldSet {
        let grid = GridSpec::new(1_000_000, 2, 3).unwrap();
        FieldSet::from_fn(grid, Utc.with_ymd_and_hms(2018, 9, 13, 0, 0, 0).unwrap(), |c, i, j| (c + i + j) as f32)
            .unwrap()
    }

    fn sh(script: &str) -> ExternalCommand {
        ExternalCommand::new(vec!["sh".into(), "-c".into(), script.into(), "backend".into()])
    }

    #[test]
    fn exit_code_is_surfaced() {
        let err = external_step(&state(), &sh("echo boom >&2; exit 3")).unwrap_err();
        match err {
            BackendError::ProcessFailed { code, diagnostics } => {
                assert_eq!(code, Some(3));
                assert_eq!(diagnostics, "boom");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn missing_output() {
        let err = external_step(&state(), &sh("exit 0")).unwrap_err();
        assert_eq!(err, BackendError::BadOutput("output.wxs missing".into()));
    }

    #[test]
    fn unchanged_time_rejected() {
        let err = external_step(&state(), &sh("cp \"$1/input.wxs\" \"$1/output.wxs\"")).unwrap_err();
        assert!(matches!(err, BackendError::BadOutput(m) if m.starts_with("valid_time")));
    }

    #[test]
    fn timeout() {
        let mut cmd = sh("sleep 5");
        cmd.timeout_secs = 1;
        let started = Instant::now();
        assert_eq!(external_step(&state(), &cmd).unwrap_err(), BackendError::Timeout(Duration::from_secs(1)));
        assert!(started.elapsed() < Duration::from_secs(4));
    }

    #[test]
    fn dir_placeholder_substitution() {
        let cmd = ExternalCommand::new(vec!["prog".into(), "--dir={dir}".into()]);
        let built = cmd.build(Path::new("/x/y"));
        let args: Vec<_> = built.get_args().collect();
        assert_eq!(args, vec!["--dir=/x/y"]);
    }

    #[test]
    fn missing_program() {
        let cmd = ExternalCommand::new(vec!["/definitely/not/here".into()]);
        assert!(matches!(external_step(&state(), &cmd), Err(BackendError::ProcessFailed { code: None, .. })));
    }
}
