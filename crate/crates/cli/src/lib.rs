//! Experiment harness for threshold group testing schemes: scheme bundles on
//! disk, seeded randomized trials, and benchmark grids.

pub mod bench;
pub mod bundle;
pub mod config;
pub mod error;
pub mod simulate;

pub use bundle::{generate, Bundle, SchemeManifest};
pub use config::ExperimentConfig;
pub use error::{CliError, Result};
pub use simulate::{Placement, SimulationOptions, Summary, TrialRecord};
