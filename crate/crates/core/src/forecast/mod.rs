//! Autoregressive forecast rollout over pluggable 6-hourly backends.

mod external;
mod surrogate;

use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::VariableCatalog;
use crate::field::FieldSet;
use crate::perturb::VariableStats;
use crate::trajectory::{timestep, TIMESTEP_HOURS};

pub use external::{external_step, ExternalBackend, ExternalCommand, INPUT_FILE, OUTPUT_FILE};
pub use surrogate::{surrogate_step, SurrogateBackend, SurrogateParams};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BackendError {
    #[error("backend process failed (exit code {}): {diagnostics}", code.map_or("none".to_string(), |c| c.to_string()))]
    ProcessFailed { code: Option<i32>, diagnostics: String },
    #[error("bad backend output: {0}")]
    BadOutput(String),
    #[error("backend timeout after {0:?}")]
    Timeout(Duration),
    #[error("backend produced non-finite state")]
    NonFiniteState,
    #[error("backend i/o: {0}")]
    Io(String),
    #[error("invalid backend: {0}")]
    Invalid(String),
}

/// One 6-hour advance of a deterministic forecast model.
pub trait ForecastBackend: Send + Sync {
    fn step(&self, state: &FieldSet) -> Result<FieldSet, BackendError>;

    fn describe(&self) -> String;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum BackendKind {
    Surrogate(SurrogateParams),
    External(ExternalCommand),
}

/// Serializable backend selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendDescriptor {
    #[serde(default = "default_timestep_hours")]
    pub timestep_hours: i64,
    #[serde(flatten)]
    pub kind: BackendKind,
}

fn default_timestep_hours() -> i64 {
    TIMESTEP_HOURS
}

impl BackendDescriptor {
    pub fn surrogate(params: SurrogateParams) -> Self {
        BackendDescriptor { timestep_hours: TIMESTEP_HOURS, kind: BackendKind::Surrogate(params) }
    }

    pub fn external(cmd: ExternalCommand) -> Self {
        BackendDescriptor { timestep_hours: TIMESTEP_HOURS, kind: BackendKind::External(cmd) }
    }

    pub fn validate(&self) -> Result<(), BackendError> {
        if self.timestep_hours != TIMESTEP_HOURS {
            return Err(BackendError::Invalid(format!(
                "timestep must be {TIMESTEP_HOURS} h, got {} h",
                self.timestep_hours
            )));
        }
        match &self.kind {
            BackendKind::Surrogate(p) => p.validate(),
            BackendKind::External(c) => c.validate(),
        }
    }

    /// Instantiates the backend. The surrogate relaxes toward `reference` means.
    pub fn build(&self, reference: &VariableStats) -> Result<Box<dyn ForecastBackend>, BackendError> {
        self.validate()?;
        Ok(match &self.kind {
            BackendKind::Surrogate(p) => Box::new(SurrogateBackend::new(*p, reference)?),
            BackendKind::External(c) => Box::new(ExternalBackend::new(c.clone())?),
        })
    }
}

/// A forecast trajectory of states; `states[0]` is the initial condition.
#[derive(Debug, Clone, PartialEq)]
pub struct ForecastRun {
    pub states: Vec<FieldSet>,
    pub backend: String,
}

impl ForecastRun {
    pub fn initial(&self) -> &FieldSet {
        &self.states[0]
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

#[derive(Debug, Error)]
#[error("rollout failed producing state {step}: {source}")]
pub struct RolloutError {
    /// Index of the state that could not be produced (1 = first forecast step).
    pub step: usize,
    /// States produced before the failure, starting with the initial condition.
    pub partial: Vec<FieldSet>,
    #[source]
    pub source: BackendError,
}

impl RolloutError {
    pub fn diverged(&self) -> bool {
        self.source == BackendError::NonFiniteState
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RolloutOptions {
    /// Clamp RH channels to [0, 100] after every step.
    pub clamp: bool,
}

pub fn rollout(backend: &dyn ForecastBackend, ic: &FieldSet, steps: usize) -> Result<ForecastRun, RolloutError> {
    rollout_with(backend, ic, steps, RolloutOptions::default())
}

/// Runs `steps` autoregressive 6-hour steps; the result holds `steps + 1` states.
pub fn rollout_with(
    backend: &dyn ForecastBackend,
    ic: &FieldSet,
    steps: usize,
    opts: RolloutOptions,
) -> Result<ForecastRun, RolloutError> {
    let mut states = Vec::with_capacity(steps + 1);
    states.push(ic.clone());
    if steps == 0 {
        return Err(RolloutError {
            step: 0,
            partial: states,
            source: BackendError::Invalid("steps must be at least 1".into()),
        });
    }
    for k in 1..=steps {
        let prev = &states[k - 1];
        let next = backend.step(prev).and_then(|s| {
            if !s.is_compatible(prev) {
                return Err(BackendError::BadOutput("grid mismatch".into()));
            }
            if s.valid_time() != prev.valid_time() + timestep() {
                return Err(BackendError::BadOutput(format!(
                    "valid_time {} is not 6 h after {}",
                    s.valid_time(),
                    prev.valid_time()
                )));
            }
            Ok(if opts.clamp { clamp_physical(&s) } else { s })
        });
        match next {
            Ok(s) => states.push(s),
            Err(source) => return Err(RolloutError { step: k, partial: states, source }),
        }
    }
    Ok(ForecastRun { states, backend: backend.describe() })
}

/// Clamps relative humidity channels to [0, 100] %. Other channels are copied unchanged.
pub fn clamp_physical(state: &FieldSet) -> FieldSet {
    let n = state.grid().points();
    let mut values = state.values().to_vec();
    for c in VariableCatalog::standard().rh_channels() {
        for v in &mut values[c * n..(c + 1) * n] {
            *v = v.clamp(0.0, 100.0);
        }
    }
    FieldSet::new(*state.grid(), state.valid_time(), values).expect("clamping keeps values finite")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use crate::perturb::ChannelStats;
    use chrono::{TimeZone, Utc};
    use std::sync::atomic::{AtomicUsize, Ordering};

    fn ic() -> FieldSet {
        let grid = GridSpec::new(1_000_000, 4, 6).unwrap();
        let t = Utc.with_ymd_and_hms(2018, 9, 13, 0, 0, 0).unwrap();
        FieldSet::from_fn(
            grid,
            t,
            |c, i, j| if c >= 60 { (i * 40) as f32 - 10.0 + j as f32 } else { (c + i * j) as f32 },
        )
        .unwrap()
    }

    fn stats() -> VariableStats {
        VariableStats::new(vec![ChannelStats { mean: 3.0, std: 1.0 }; 73]).unwrap()
    }

    struct FailsAt {
        step: usize,
        calls: AtomicUsize,
        error: BackendError,
    }

    impl ForecastBackend for FailsAt {
        fn step(&self, state: &FieldSet) -> Result<FieldSet, BackendError> {
            let n = self.calls.fetch_add(1, Ordering::SeqCst) + 1;
            if n == self.step {
                return Err(self.error.clone());
            }
            Ok(state.clone().with_valid_time(state.valid_time() + timestep()))
        }
        fn describe(&self) -> String {
            "fails".into()
        }
    }

    #[test]
    fn fourteen_steps_span_84_hours() {
        let b = SurrogateBackend::new(SurrogateParams { advect_cells_lon: 1, relax_rate: 0.1 }, &stats()).unwrap();
        let run = rollout(&b, &ic(), 14).unwrap();
        assert_eq!(run.len(), 15);
        assert_eq!(run.states[14].valid_time() - run.states[0].valid_time(), chrono::Duration::hours(84));
        for w in run.states.windows(2) {
            assert_eq!(w[1].valid_time() - w[0].valid_time(), chrono::Duration::hours(6));
        }
    }

    #[test]
    fn identity_surrogate_keeps_state() {
        let b = SurrogateBackend::new(SurrogateParams { advect_cells_lon: 0, relax_rate: 0.0 }, &stats()).unwrap();
        let start = ic();
        let run = rollout(&b, &start, 5).unwrap();
        for s in &run.states {
            assert_eq!(s.values(), start.values());
        }
    }

    #[test]
    fn rollout_is_deterministic() {
        let b = SurrogateBackend::new(SurrogateParams { advect_cells_lon: 2, relax_rate: 0.3 }, &stats()).unwrap();
        assert_eq!(rollout(&b, &ic(), 6).unwrap(), rollout(&b, &ic(), 6).unwrap());
    }

    #[test]
    fn zero_steps_rejected() {
        let b = SurrogateBackend::new(SurrogateParams { advect_cells_lon: 0, relax_rate: 0.0 }, &stats()).unwrap();
        assert!(rollout(&b, &ic(), 0).is_err());
    }

    #[test]
    fn failure_carries_step_and_partial_states() {
        let b = FailsAt { step: 3, calls: AtomicUsize::new(0), error: BackendError::NonFiniteState };
        let err = rollout(&b, &ic(), 14).unwrap_err();
        assert_eq!(err.step, 3);
        assert_eq!(err.partial.len(), 3);
        assert!(err.diverged());
        assert_eq!(err.to_string(), "rollout failed producing state 3: backend produced non-finite state");
    }

    #[test]
    fn clamp_contract() {
        let s = ic();
        let c = clamp_physical(&s);
        let cat = VariableCatalog::standard();
        let rh: Vec<usize> = cat.rh_channels().collect();
        for ch in 0..73 {
            for (a, b) in s.channel(ch).iter().zip(c.channel(ch)) {
                if rh.contains(&ch) {
                    assert_eq!(*b, a.clamp(0.0, 100.0));
                } else {
                    assert_eq!(a.to_bits(), b.to_bits());
                }
            }
        }
        assert!(c.channel(60).contains(&0.0));
        assert!(c.channel(60).contains(&100.0));
        assert_eq!(clamp_physical(&c), c);
    }

    #[test]
    fn clamp_in_rollout() {
        let b = SurrogateBackend::new(SurrogateParams { advect_cells_lon: 0, relax_rate: 0.0 }, &stats()).unwrap();
        let run = rollout_with(&b, &ic(), 2, RolloutOptions { clamp: true }).unwrap();
        assert!(run.states[0].channel(60).iter().any(|&v| v < 0.0));
        assert!(run.states[1].channel(60).iter().all(|&v| (0.0..=100.0).contains(&v)));
    }

    #[test]
    fn descriptor_validation() {
        let mut d = BackendDescriptor::surrogate(SurrogateParams { advect_cells_lon: 1, relax_rate: 0.2 });
        assert!(d.validate().is_ok());
        d.timestep_hours = 3;
        assert!(d.validate().is_err());
        let bad = BackendDescriptor::surrogate(SurrogateParams { advect_cells_lon: 1, relax_rate: 1.2 });
        assert!(bad.validate().is_err());
    }

    #[test]
    fn descriptor_toml() {
        let d: BackendDescriptor =
            toml::from_str("kind = \"surrogate\"\nadvect_cells_lon = 1\nrelax_rate = 0.25\n").unwrap();
        assert_eq!(d, BackendDescriptor::surrogate(SurrogateParams { advect_cells_lon: 1, relax_rate: 0.25 }));
        let e: BackendDescriptor =
            toml::from_str("kind = \"external\"\ncommand = [\"python3\", \"adapter.py\"]\ntimeout_secs = 60\n")
                .unwrap();
        match e.kind {
            BackendKind::External(c) => {
                assert_eq!(c.command, vec!["python3", "adapter.py"]);
                assert_eq!(c.timeout_secs, 60);
            }
            _ => panic!(),
        }
    }
}
