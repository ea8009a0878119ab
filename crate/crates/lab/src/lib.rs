//! Files, thread pools and the `brolin-lab` command line on top of
//! `brolin-core`.

pub mod commands;
pub mod config;
pub mod error;
pub mod exec;
pub mod formats;
pub mod measure_doc;

pub use config::{ExperimentConfig, Loaded};
pub use error::{LabError, LabResult};
pub use exec::Rayon;
