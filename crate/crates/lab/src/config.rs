//! Run configuration: a flat JSON document, overridden by command-line flags.

use std::fmt::Display;
use std::path::PathBuf;
use std::str::FromStr;

use dmc_core::{KeepFactor, ModelParams, ResamplerKind, Scheme};
use serde::{Deserialize, Serialize};

use crate::error::LabError;
use crate::experiments::SweepAxis;

/// Largest relative gap allowed between the requested and effective `δt`.
pub const DT_TOLERANCE: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub omega: f64,
    pub theta: f64,
    #[serde(rename = "T")]
    pub final_time: f64,
    pub dt: f64,
    pub nu: usize,
    pub walkers: usize,
    #[serde(with = "as_string")]
    pub resampler: ResamplerKind,
    #[serde(with = "as_string")]
    pub scheme: Scheme,
    #[serde(with = "as_string")]
    pub keep_factor: KeepFactor,
    pub seed: u64,
    /// Repetitions per sweep point or variance curve.
    pub reps: usize,
    /// Odd basis functions in the spectral reference.
    pub basis_size: usize,
    #[serde(with = "as_string")]
    pub axis: SweepAxis,
    /// Sweep values; empty selects the default grid of the axis.
    pub values: Vec<f64>,
    pub out: Option<PathBuf>,
    pub plot: bool,
    pub threads: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            omega: 1.0,
            theta: 2.0,
            final_time: 5.0,
            dt: 5e-3,
            nu: 31,
            walkers: 5000,
            resampler: ResamplerKind::Multinomial,
            scheme: Scheme::Exact,
            keep_factor: KeepFactor::InverseMax,
            seed: 0,
            reps: 200,
            basis_size: 40,
            axis: SweepAxis::Walkers,
            values: Vec::new(),
            out: None,
            plot: false,
            threads: None,
        }
    }
}

mod as_string {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<T: Display, S: Serializer>(value: &T, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(value)
    }

    pub fn deserialize<'de, T, D>(d: D) -> Result<T, D::Error>
    where
        T: FromStr,
        T::Err: Display,
        D: Deserializer<'de>,
    {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Values given on the command line; each one replaces the file value.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub omega: Option<f64>,
    pub theta: Option<f64>,
    pub final_time: Option<f64>,
    pub dt: Option<f64>,
    pub nu: Option<usize>,
    pub walkers: Option<usize>,
    pub resampler: Option<ResamplerKind>,
    pub scheme: Option<Scheme>,
    pub keep_factor: Option<KeepFactor>,
    pub seed: Option<u64>,
    pub reps: Option<usize>,
    pub basis_size: Option<usize>,
    pub axis: Option<SweepAxis>,
    pub values: Option<Vec<f64>>,
    pub out: Option<PathBuf>,
    pub plot: bool,
    pub threads: Option<usize>,
}

impl RunConfig {
    /// Parses a JSON document; blank text gives the defaults.
    pub fn from_json(text: &str) -> Result<Self, LabError> {
        if text.trim().is_empty() {
            return Ok(RunConfig::default());
        }
        serde_json::from_str(text).map_err(|e| LabError::Config(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("configuration serializes")
    }

    pub fn apply(&mut self, o: &Overrides) {
        macro_rules! take {
            ($($field:ident),*) => {
                $(if let Some(v) = o.$field.clone() { self.$field = v; })*
            };
        }
        take!(
            omega,
            theta,
            final_time,
            dt,
            nu,
            walkers,
            resampler,
            scheme,
            keep_factor,
            seed,
            reps,
            basis_size,
            axis,
            values
        );
        if o.out.is_some() {
            self.out = o.out.clone();
        }
        if o.threads.is_some() {
            self.threads = o.threads;
        }
        self.plot |= o.plot;
    }

    /// Model parameters with `κ = round(T/(ν dt))` and `δt = T/(νκ)`.
    ///
    /// Rejects a requested `dt` more than 1% away from the effective one, and
    /// an explicit scheme with `dt ≥ 1/(2ω)`.
    pub fn model_params(&self) -> Result<ModelParams, LabError> {
        if self.scheme == Scheme::Explicit && self.omega > 0.0 && self.dt >= 0.5 / self.omega {
            return Err(dmc_core::Error::UnstableTimeStep {
                dt: self.dt,
                bound: 0.5 / self.omega,
            }
            .into());
        }
        let p = ModelParams::builder()
            .omega(self.omega)
            .theta(self.theta)
            .final_time(self.final_time)
            .blocks(self.nu)
            .time_step(self.dt)
            .walkers(self.walkers)
            .seed(self.seed)
            .scheme(self.scheme)
            .resampler(self.resampler)
            .keep_factor(self.keep_factor)
            .build()?;
        let gap = (p.dt() - self.dt).abs() / self.dt;
        if gap > DT_TOLERANCE {
            return Err(LabError::Config(format!(
                "T = {}, nu = {} and dt = {} are inconsistent: the nearest kappa = {} gives dt = {:.6e} ({:.2}% off)",
                self.final_time,
                self.nu,
                self.dt,
                p.steps_per_block(),
                p.dt(),
                100.0 * gap
            )));
        }
        Ok(p)
    }

    /// Sweep values, falling back to the default grid of the axis.
    pub fn sweep_values(&self) -> Vec<f64> {
        if !self.values.is_empty() {
            return self.values.clone();
        }
        match self.axis {
            SweepAxis::Walkers => vec![250.0, 1000.0, 4000.0],
            SweepAxis::TimeStep => vec![5e-3, 1e-2, 2e-2, 4e-2],
            SweepAxis::Reconfigurations => vec![1.0, 5.0, 20.0, 50.0, 200.0],
        }
    }
}
