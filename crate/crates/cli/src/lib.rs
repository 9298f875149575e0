//! Experiment harness for the `lattice-landscape` library: configuration,
//! named presets, the run pipeline and its CSV/JSON artifacts.

pub mod config;
pub mod output;
pub mod pipeline;
pub mod presets;
pub mod suite;

pub use config::{ExperimentConfig, Overrides};
pub use pipeline::{run, RunOutcome};
