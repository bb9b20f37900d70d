//! Experiment runner for the `sahmc` sampler: TOML configs in, sample
//! dumps, plot extracts and metric tables out.

pub mod artifacts;
pub mod compare;
pub mod config;
pub mod error;
pub mod experiment;
pub mod plot;

pub use compare::{compare_summary, CompareSummary};
pub use config::{parse_config, ExperimentConfig, Metric, Profile, TargetSpec};
pub use error::{HarnessError, HarnessResult};
pub use experiment::{run_experiment, ExperimentOutput, ResultTable, RunOptions, TimingTable};
pub use plot::{emit_plot_data, PlotKind};

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/harness.md")]
mod book {}
