//! CSV files: a header row, one `#` comment line with the effective
//! configuration, then the data rows. Floats carry 17 significant digits.

use std::io::Write;

use dmc_core::{ModelParams, RunResult, SpectralModel};

use crate::config::RunConfig;
use crate::error::LabError;
use crate::experiments::{OptimalNu, SweepRow};

pub const RUN_HEADER: [&str; 12] = [
    "estimator_ratio",
    "estimator_mean_after_selection",
    "seed",
    "omega",
    "theta",
    "T",
    "dt",
    "nu",
    "kappa",
    "walkers",
    "resampler",
    "scheme",
];

pub const SWEEP_HEADER: [&str; 7] = [
    "axis",
    "axis_value",
    "mean_abs_error",
    "error_variance",
    "estimator_variance",
    "repetitions",
    "reference",
];

pub const SPECTRAL_HEADER: [&str; 7] = [
    "basis_size",
    "omega",
    "theta",
    "T",
    "ground_energy",
    "gap",
    "edmc_reference",
];

pub const OPTIMAL_NU_HEADER: [&str; 3] = ["t_star", "nu_star", "grid_min_variance"];

/// Scientific notation with 17 significant digits, which parses back to the
/// same `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// `# config {...}` followed by the derived `κ` and `δt` when known.
pub fn config_comment(config: &RunConfig, params: Option<&ModelParams>) -> String {
    match params {
        Some(p) => format!(
            "# config {}; kappa={}; effective_dt={}",
            config.to_json(),
            p.steps_per_block(),
            fmt_f64(p.dt())
        ),
        None => format!("# config {}", config.to_json()),
    }
}

pub fn write_csv<W: Write>(mut sink: W, header: &[&str], comment: &str, rows: &[Vec<String>]) -> Result<(), LabError> {
    let mut w = csv::Writer::from_writer(&mut sink);
    w.write_record(header)?;
    w.flush()?;
    drop(w);
    writeln!(sink, "{comment}")?;
    let mut w = csv::Writer::from_writer(&mut sink);
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn run_row(r: &RunResult) -> Vec<String> {
    let p = &r.params;
    vec![
        fmt_f64(r.e_ratio),
        fmt_f64(r.e_mean_after_selection),
        p.seed().to_string(),
        fmt_f64(p.omega()),
        fmt_f64(p.theta()),
        fmt_f64(p.final_time()),
        fmt_f64(p.dt()),
        p.blocks().to_string(),
        p.steps_per_block().to_string(),
        p.walkers().to_string(),
        p.resampler().to_string(),
        p.scheme().to_string(),
    ]
}

pub fn sweep_row(r: &SweepRow) -> Vec<String> {
    vec![
        r.axis.to_string(),
        fmt_f64(r.axis_value),
        fmt_f64(r.mean_abs_error),
        fmt_f64(r.error_variance),
        fmt_f64(r.estimator_variance),
        r.repetitions.to_string(),
        fmt_f64(r.reference),
    ]
}

pub fn spectral_row(m: &SpectralModel, final_time: f64, edmc: f64) -> Vec<String> {
    vec![
        m.basis_size().to_string(),
        fmt_f64(m.omega()),
        fmt_f64(m.theta()),
        fmt_f64(final_time),
        fmt_f64(m.ground_energy()),
        fmt_f64(m.gap().unwrap_or(f64::NAN)),
        fmt_f64(edmc),
    ]
}

pub fn optimal_nu_row(o: &OptimalNu) -> Vec<String> {
    vec![fmt_f64(o.t_star), o.nu_star.to_string(), fmt_f64(o.grid_min_variance)]
}
