//! Benchmark harness for the quantum B+ tree simulation: configuration,
//! synthetic and file-based datasets, workload generation, the experiment
//! runner and the verification suites behind the `qbtree` binary.

pub mod checks;
pub mod config;
pub mod demo;
pub mod ingest;
pub mod queries;
pub mod runner;
pub mod synth;

pub use config::{Eval, ExperimentConfig, KeyMode, Mode, ResultRow, CSV_HEADER};
pub use runner::{run_experiment, write_csv};
