//! Experiment orchestration: configuration files, multi-seed runs, metrics
//! and checkpoint files, evaluation probes and charts.

pub mod config;
pub mod eval;
pub mod plot;
pub mod run;

pub use config::{Algorithm, EnvConfig, ExperimentConfig};
pub use eval::{evaluate, EvalReport, Probe, ProbeReport};
pub use plot::plot;
pub use run::{run, Checkpoint, MetricsTable, RunOutput};
