//! Experiment harness: configuration, manifests, and experiment drivers.

pub mod config;
pub mod experiments;
pub mod manifest;

pub use config::{Constants, ExperimentConfig, ModelSpec, ScheduleSpec};
pub use experiments::{
    calibrate, pde_report, run_experiment, schedule_report, validate_battery,
};
pub use manifest::{Check, RunManifest};
