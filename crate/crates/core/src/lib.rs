//! Robustness testing of gridded weather-forecast models against perturbed
//! and fully randomized initial conditions.
//!
//! The pipeline: read a 73-variable global state ([`state_io`]), perturb it
//! ([`perturb`]), roll it forward through a backend ([`forecast`]), follow the
//! storm's pressure minimum ([`tracking`]), and summarize the error field
//! against truth ([`error_stats`]). [`ensemble`] drives many trials of that
//! pipeline and records everything in a manifest.

// `!(x > 0.0)` style checks are deliberate: they reject NaN along with the bad range.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod catalog;
pub mod cli;
pub mod ensemble;
pub mod error_stats;
pub mod field;
pub mod forecast;
pub mod grid;
pub mod moments;
pub mod perturb;
pub mod state_io;
pub mod synthetic;
pub mod tracking;
pub mod trajectory;

pub use catalog::{VariableCatalog, CHANNEL_COUNT};
pub use field::{FieldError, FieldSet};
pub use grid::{GridSpec, LatLon, Region};
pub use trajectory::{TrackPoint, Trajectory};
