//! Configuration, orchestration, deterministic sweeps, and data emission.

pub mod config;
pub mod run;

pub use config::{
    parse_config, parse_config_str, ConfigError, ExperimentConfig, ExperimentKind, GridScale,
    GridSpec, OutputSpec, Tolerances, SCHEMA_VERSION,
};
pub use run::{
    output_dir, run_experiment, sweep_tasks, write_atomic, HarnessError, PlotHint, RunManifest,
    Table, TaskStatus,
};
