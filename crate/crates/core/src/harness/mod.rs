//! Experiment configuration, Monte Carlo replication, validity oracles and
//! result files.
//!
//! A trial row is identified by `(config_hash, seed, method)` and can be
//! regenerated with [`replay_trial`].

pub mod config;
pub mod experiment;
pub mod graph;
pub mod validity;

pub use config::{EnvKindName, EnvironmentConfig, ExperimentConfig, H1Rule, HypothesesConfig, MethodConfig};
pub use experiment::{
    mean_se, median_with_inf, metrics, read_csv, replay_trial, run_experiment, write_csv, write_outputs,
    ExperimentOutput, Manifest, MethodMetrics, MetricsTable, RunOptions, TrialRecord, CSV_COLUMNS, SCHEMA_VERSION,
};
pub use graph::{graph_config, graph_experiment, graph_methods};
pub use validity::{validity_suite, Check, ValidityConfig};
