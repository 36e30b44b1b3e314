//! Reproducible experiments: configuration, task execution, file output.

pub mod config;
pub mod export;
pub mod rng;
pub mod run;

pub use config::{ExperimentConfig, Task};
pub use run::{output_dir, run, run_with_threads, RunOutcome};
