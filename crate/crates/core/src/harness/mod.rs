//! Scenario configs, the experiment catalog and the Monte-Carlo engine.

pub mod catalog;
pub mod config;
pub mod output;
pub mod run;

pub use catalog::{experiment, experiment_catalog, Experiment};
pub use config::{normalized_power, Metric, ScenarioConfig};
pub use run::{run_scenario, run_scenario_with, RunResult, Series};
