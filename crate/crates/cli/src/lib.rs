//! Configuration, experiment orchestration and PDE-versus-effective
//! comparisons for the `glvx` command-line tool.

pub mod compare;
pub mod config;
pub mod experiment;

pub use compare::{compare_trajectories, ComparisonReport, TrackSeries};
pub use config::{parse_config, ExperimentConfig, Model};
pub use experiment::{exit_code_for, run_experiment, ExperimentOutcome};
