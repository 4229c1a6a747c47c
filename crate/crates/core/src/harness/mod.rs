//! Experiment orchestration: config files, the round loop, result files.

pub mod config;
pub mod diagnostics;
pub mod experiment;
pub mod output;

pub use config::{DatasetSource, ExperimentConfig};
pub use experiment::{
    compare_modes, prepare, run_centralized, run_experiment, run_prepared, Comparison,
    ComparisonRow, ExperimentResult, RoundLog, Setup, MU_SWEEP,
};
pub use output::{parse_rounds_csv, write_outputs, RoundRow};
