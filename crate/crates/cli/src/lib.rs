//! Experiment harness around `branchline-core`: JSON-configured fixtures,
//! a validate/approximate/recover pipeline, delta sweeps, and CSV/JSON
//! artifacts with deterministic bytes.

pub mod config;
pub mod generate;
pub mod pipeline;
pub mod plot;
pub mod report;

pub use config::{load_config, ExperimentConfig};
pub use generate::generate_fixture;
pub use pipeline::{run_pipeline, RunOutcome, Verb};
pub use plot::emit_plot_data;
pub use report::{read_report, Report};
