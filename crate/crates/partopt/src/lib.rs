//! Experiment harness for the `partopt-core` samplers: TOML experiment specs,
//! dataset loading, seeded multi-repeat runs, CSV output and SVG plots.

pub mod build;
pub mod dataset;
pub mod error;
pub mod output;
pub mod plot;
pub mod report;
pub mod run;
pub mod spec;
pub mod sweep;

pub use build::{build_target, BuiltTarget};
pub use error::{HarnessError, Result};
pub use output::{export_csv, export_particles, read_metrics, read_particles, MetricRow};
pub use plot::{render_curves, render_scatter};
pub use run::{run_experiment, ExperimentResult, RepeatStatus, RunContext, RunRecord, SummaryRow};
pub use spec::{load_spec, parse_spec, save_spec, ExperimentSpec};
