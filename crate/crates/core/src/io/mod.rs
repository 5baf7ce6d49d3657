//! Configuration, run directories, CSV and SVG artifacts, and the experiment
//! drivers behind the command line.

pub mod config;
pub mod csv;
pub mod experiments;
pub mod manifest;
pub mod plot;

pub use config::{parse_config, ExperimentConfig};
pub use csv::fmt_g17;
pub use experiments::{run_config_file, run_experiment, ExitStatus, Experiment, RunOutcome};
pub use manifest::{RunManifest, SCHEMA_VERSION};
pub use plot::{emit_plot, PlotOptions, Series, Style};
