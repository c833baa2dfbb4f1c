//! Experiments, configuration, CSV/SVG output and the `dmc` command line on
//! top of `dmc-core`.

pub mod cli;
pub mod config;
pub mod error;
pub mod experiments;
pub mod output;
pub mod plot;
pub mod selftest;
pub mod stats;

pub use config::RunConfig;
pub use error::LabError;
pub use experiments::{
    compare_resamplers, estimate_optimal_nu, fit_loglog_slope, run_sweep, variance_vs_time_no_selection, SweepAxis,
    SweepRow, SweepSpec,
};
