//! Repeated-run studies: error and variance sweeps over `N`, `δt` and `ν`,
//! the variance of the unselected estimator along time, and the comparison
//! of resampling schemes.
//!
//! Repetitions are independent jobs run on the rayon pool. Repetition `r` of
//! axis value `j` is seeded with `derive_seed(seed, j, r)`, and results are
//! collected in repetition order, so every output is a pure function of the
//! inputs whatever the number of threads.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use dmc_core::engine::{init_ensemble, mutate_block, run_dmc_with_path};
use dmc_core::{derive_seed, run_dmc, ModelParams, ResamplerKind};
use rayon::prelude::*;

use crate::error::LabError;
use crate::stats::{loglog_slope, mean, sample_variance, standard_error, variance_standard_error};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SweepAxis {
    /// Number of walkers `N`.
    Walkers,
    /// Requested fine step `δt`; `κ` is re-derived with `ν` fixed.
    TimeStep,
    /// Number of reconfigurations `ν - 1`; `κ` is re-derived with `δt` fixed.
    Reconfigurations,
}

impl SweepAxis {
    pub const ALL: [SweepAxis; 3] = [SweepAxis::Walkers, SweepAxis::TimeStep, SweepAxis::Reconfigurations];

    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Walkers => "walkers",
            SweepAxis::TimeStep => "dt",
            SweepAxis::Reconfigurations => "reconfigurations",
        }
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepAxis {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SweepAxis::ALL
            .into_iter()
            .find(|a| a.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| LabError::Config(format!("unknown axis `{s}` (expected walkers, dt or reconfigurations)")))
    }
}

/// Which final estimator a sweep records.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Estimator {
    /// Weighted ratio over the last block.
    #[default]
    Ratio,
    /// Plain mean after one more selection.
    MeanAfterSelection,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub base: ModelParams,
    pub axis: SweepAxis,
    /// Strictly increasing axis values. Walkers and reconfigurations must be
    /// whole numbers.
    pub values: Vec<f64>,
    pub repetitions: usize,
    /// Value the estimates are compared to, usually the spectral reference.
    pub reference: f64,
    pub estimator: Estimator,
    /// Fine step kept fixed along the reconfigurations axis. Defaults to the
    /// base step.
    pub nominal_dt: Option<f64>,
}

impl SweepSpec {
    pub fn new(base: ModelParams, axis: SweepAxis, values: Vec<f64>, repetitions: usize, reference: f64) -> Self {
        SweepSpec {
            base,
            axis,
            values,
            repetitions,
            reference,
            estimator: Estimator::Ratio,
            nominal_dt: None,
        }
    }

    /// Parameters of the runs at `value`.
    pub fn params_at(&self, value: f64) -> Result<ModelParams, LabError> {
        let b = self.base.to_builder();
        let built = match self.axis {
            SweepAxis::Walkers => b.walkers(whole(value, "walkers", 1)?),
            SweepAxis::TimeStep => {
                if !(value > 0.0 && value.is_finite()) {
                    return Err(LabError::Config(format!("time step {value} must be positive")));
                }
                b.time_step(value)
            }
            SweepAxis::Reconfigurations => {
                let reconfigurations = whole(value, "reconfigurations", 0)?;
                b.blocks(reconfigurations + 1)
                    .time_step(self.nominal_dt.unwrap_or(self.base.dt()))
            }
        };
        Ok(built.build()?)
    }

    fn validate(&self) -> Result<(), LabError> {
        if self.values.is_empty() {
            return Err(LabError::Config("sweep needs at least one value".into()));
        }
        if !self.values.windows(2).all(|w| w[0] < w[1]) {
            return Err(LabError::Config("sweep values must be strictly increasing".into()));
        }
        if self.repetitions == 0 {
            return Err(LabError::Config("repetitions must be positive".into()));
        }
        if !self.reference.is_finite() {
            return Err(LabError::Config("reference must be finite".into()));
        }
        for &v in &self.values {
            self.params_at(v)?;
        }
        Ok(())
    }
}

fn whole(value: f64, name: &str, min: usize) -> Result<usize, LabError> {
    if value.fract() != 0.0 || value < min as f64 || !value.is_finite() {
        return Err(LabError::Config(format!(
            "{name} value {value} must be a whole number ≥ {min}"
        )));
    }
    Ok(value as usize)
}

/// Aggregate of the repetitions at one axis value.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub axis: SweepAxis,
    pub axis_value: f64,
    /// Parameters of the first repetition (the others differ by seed only).
    pub params: ModelParams,
    /// `e`: mean of `|estimate - reference|`.
    pub mean_abs_error: f64,
    /// Standard error of `e`.
    pub mean_abs_error_se: f64,
    /// Mean of `estimate - reference`.
    pub mean_error: f64,
    /// Standard error of the mean error.
    pub mean_error_se: f64,
    /// `v`: sample variance of `|estimate - reference|`.
    pub error_variance: f64,
    /// `ṽ`: sample variance of the estimates.
    pub estimator_variance: f64,
    pub repetitions: usize,
    pub reference: f64,
    /// The estimates in repetition order.
    pub estimates: Vec<f64>,
    pub wall_time: f64,
    /// Set when a repetition failed; the statistics are then NaN.
    pub failure: Option<String>,
}

impl SweepRow {
    /// The abscissa used in rate fits: the effective `δt` on the time-step
    /// axis, the requested value otherwise.
    pub fn effective_axis_value(&self) -> f64 {
        match self.axis {
            SweepAxis::TimeStep => self.params.dt(),
            _ => self.axis_value,
        }
    }
}

fn aggregate(
    axis: SweepAxis,
    value: f64,
    params: ModelParams,
    reference: f64,
    estimates: Vec<f64>,
    wall_time: f64,
) -> SweepRow {
    let errors: Vec<f64> = estimates.iter().map(|e| e - reference).collect();
    let abs_errors: Vec<f64> = errors.iter().map(|e| e.abs()).collect();
    SweepRow {
        axis,
        axis_value: value,
        params,
        mean_abs_error: mean(&abs_errors),
        mean_abs_error_se: standard_error(&abs_errors),
        mean_error: mean(&errors),
        mean_error_se: standard_error(&errors),
        error_variance: sample_variance(&abs_errors),
        estimator_variance: sample_variance(&estimates),
        repetitions: estimates.len(),
        reference,
        estimates,
        wall_time,
        failure: None,
    }
}

/// Runs every axis value `repetitions` times. A failing repetition marks its
/// row instead of aborting the sweep.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>, LabError> {
    spec.validate()?;
    let mut rows = Vec::with_capacity(spec.values.len());
    for (j, &value) in spec.values.iter().enumerate() {
        let params = spec.params_at(value)?;
        let start = Instant::now();
        let outcomes: Vec<dmc_core::Result<f64>> = (0..spec.repetitions)
            .into_par_iter()
            .map(|r| {
                let p = params.with_seed(derive_seed(spec.base.seed(), j as u64, r as u64));
                let result = run_dmc(&p)?;
                Ok(match spec.estimator {
                    Estimator::Ratio => result.e_ratio,
                    Estimator::MeanAfterSelection => result.e_mean_after_selection,
                })
            })
            .collect();
        let wall_time = start.elapsed().as_secs_f64();
        let row = match outcomes.into_iter().collect::<dmc_core::Result<Vec<f64>>>() {
            Ok(estimates) => aggregate(spec.axis, value, params, spec.reference, estimates, wall_time),
            Err(e) => SweepRow {
                failure: Some(e.to_string()),
                ..aggregate(spec.axis, value, params, spec.reference, vec![f64::NAN], wall_time)
            },
        };
        rows.push(row);
    }
    Ok(rows)
}

/// Least-squares slope of `ln e` against the log of the effective axis value.
pub fn fit_loglog_slope(rows: &[SweepRow]) -> Result<f64, LabError> {
    if rows.len() < 3 {
        return Err(LabError::Experiment("a slope fit needs at least three rows".into()));
    }
    let xs: Vec<f64> = rows.iter().map(SweepRow::effective_axis_value).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.mean_abs_error).collect();
    loglog_slope(&xs, &ys)
        .ok_or_else(|| LabError::Experiment("slope fit needs positive finite errors and axis values".into()))
}

/// The unselected estimator at one time of the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeVariance {
    pub t: f64,
    /// `ṽ(t)`: variance across repetitions of the weighted estimator.
    pub variance: f64,
    /// Standard error of `ṽ(t)`.
    pub variance_se: f64,
    /// Central-limit approximation of `ṽ(t)` from the pooled walkers.
    pub clt_proxy: f64,
    /// All repetitions gave the same estimate.
    pub degenerate: bool,
}

/// Moments pooled over walkers, for `Y = (E_L - 3ω/2) Z` and `Z`.
#[derive(Debug, Clone, Copy, Default)]
struct Pooled {
    count: f64,
    y: f64,
    z: f64,
    yy: f64,
    zz: f64,
    yz: f64,
}

impl Pooled {
    fn add(&mut self, y: f64, z: f64) {
        self.count += 1.0;
        self.y += y;
        self.z += z;
        self.yy += y * y;
        self.zz += z * z;
        self.yz += y * z;
    }

    fn merge(&mut self, o: &Pooled) {
        self.count += o.count;
        self.y += o.y;
        self.z += o.z;
        self.yy += o.yy;
        self.zz += o.zz;
        self.yz += o.yz;
    }

    /// `(1/N)[Var Y/(EZ)² - 2 EY Cov(Y,Z)/(EZ)³ + (EY)² Var Z/(EZ)⁴]`.
    fn proxy(&self, walkers: usize) -> f64 {
        let n = self.count;
        let (ey, ez) = (self.y / n, self.z / n);
        let c = n / (n - 1.0);
        let var_y = c * (self.yy / n - ey * ey);
        let var_z = c * (self.zz / n - ez * ez);
        let cov = c * (self.yz / n - ey * ez);
        (var_y / (ez * ez) - 2.0 * ey * cov / (ez * ez * ez) + ey * ey * var_z / (ez * ez * ez * ez)) / walkers as f64
    }
}

fn grid_indices(p: &ModelParams, t_grid: &[f64]) -> Result<Vec<usize>, LabError> {
    if t_grid.is_empty() {
        return Err(LabError::Config("time grid is empty".into()));
    }
    let total = p.total_steps();
    let mut indices = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let k = (t / p.dt()).round();
        if !(k >= 1.0 && k <= total as f64) || (k * p.dt() - t).abs() > 1e-9 * t.max(1.0) {
            return Err(LabError::Config(format!(
                "grid time {t} is not a positive multiple of dt = {} within T",
                p.dt()
            )));
        }
        indices.push(k as usize);
    }
    if !indices.windows(2).all(|w| w[0] < w[1]) {
        return Err(LabError::Config("time grid must be strictly increasing".into()));
    }
    Ok(indices)
}

/// All fine times `kδt`, `k = 1..=νκ`.
pub fn fine_time_grid(p: &ModelParams) -> Vec<f64> {
    (1..=p.total_steps()).map(|k| k as f64 * p.dt()).collect()
}

/// Variance along time of the weighted estimator without selection, with the
/// central-limit proxy computed from the same walkers.
///
/// Requires `ν = 1` and no resampling; `t_grid` holds multiples of `δt` in `(0, T]`.
pub fn variance_vs_time_no_selection(
    p: &ModelParams,
    t_grid: &[f64],
    repetitions: usize,
) -> Result<Vec<TimeVariance>, LabError> {
    if p.blocks() != 1 || p.resampler() != ResamplerKind::None {
        return Err(LabError::Config(
            "the unselected estimator needs nu = 1 and resampler = none".into(),
        ));
    }
    if repetitions < 2 {
        return Err(LabError::Config(
            "at least two repetitions are needed for a variance".into(),
        ));
    }
    let indices = grid_indices(p, t_grid)?;
    let per_rep: Vec<dmc_core::Result<(Vec<f64>, Vec<Pooled>)>> = (0..repetitions)
        .into_par_iter()
        .map(|r| unselected_path(&p.with_seed(derive_seed(p.seed(), 0, r as u64)), &indices))
        .collect();
    let mut estimates = vec![Vec::with_capacity(repetitions); indices.len()];
    let mut pooled = vec![Pooled::default(); indices.len()];
    for outcome in per_rep {
        let (values, moments) = outcome?;
        for (g, (v, m)) in values.into_iter().zip(&moments).enumerate() {
            estimates[g].push(v);
            pooled[g].merge(m);
        }
    }
    Ok(t_grid
        .iter()
        .zip(estimates.iter().zip(&pooled))
        .map(|(&t, (values, moments))| {
            let variance = sample_variance(values);
            TimeVariance {
                t,
                variance,
                variance_se: variance_standard_error(values),
                clt_proxy: moments.proxy(p.walkers()),
                degenerate: variance == 0.0,
            }
        })
        .collect())
}

fn unselected_path(p: &ModelParams, indices: &[usize]) -> dmc_core::Result<(Vec<f64>, Vec<Pooled>)> {
    let mut state = init_ensemble(p);
    mutate_block(&mut state, p)?;
    let blocks = state.blocks();
    let scale = -p.theta() * p.dt();
    let mut log_z = vec![0.0; blocks.len()];
    let mut values = Vec::with_capacity(indices.len());
    let mut moments = Vec::with_capacity(indices.len());
    let mut next = indices.iter().peekable();
    for k in 1..=p.total_steps() {
        for (l, b) in log_z.iter_mut().zip(blocks) {
            *l += scale * b.positions()[k - 1].powi(4);
        }
        if next.peek() != Some(&&k) {
            continue;
        }
        next.next();
        let max = log_z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let (mut num, mut den) = (0.0, 0.0);
        let mut pooled = Pooled::default();
        for (&l, b) in log_z.iter().zip(blocks) {
            let excess = p.theta() * b.positions()[k - 1].powi(4);
            let w = (l - max).exp();
            num += w * excess;
            den += w;
            // The constant 3ω/2 is left out of both Y and the exponent of Z;
            // the proxy is invariant under either change.
            let z = l.exp();
            pooled.add(excess * z, z);
        }
        values.push(p.ground_local_energy() + num / den);
        moments.push(pooled);
    }
    Ok((values, moments))
}

/// Minimizer of the variance curve and the implied number of blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimalNu {
    pub t_star: f64,
    pub nu_star: usize,
    pub grid_min_variance: f64,
    pub curve: Vec<TimeVariance>,
}

/// `(t*, round(T/t*), ṽ(t*))` for a curve `(t, ṽ(t))` sorted by `t`.
/// Ties go to the smaller `t`. A minimum at either end of the grid is an error.
pub fn optimal_nu_from_curve(final_time: f64, curve: &[(f64, f64)]) -> Result<(f64, usize, f64), LabError> {
    if curve.len() < 3 {
        return Err(LabError::Experiment(
            "variance curve needs at least three points".into(),
        ));
    }
    let mut best = 0;
    for (i, &(_, v)) in curve.iter().enumerate() {
        if v < curve[best].1 {
            best = i;
        }
    }
    if best == 0 || best == curve.len() - 1 {
        return Err(LabError::Experiment(format!(
            "variance has no interior minimum on the grid (smallest at t = {})",
            curve[best].0
        )));
    }
    let (t, v) = curve[best];
    let nu = ((final_time / t).round() as usize).max(1);
    Ok((t, nu, v))
}

/// `ν* = round(T/t*)` with `t*` the grid minimizer of the unselected variance.
pub fn estimate_optimal_nu(p: &ModelParams, t_grid: &[f64], repetitions: usize) -> Result<OptimalNu, LabError> {
    let curve = variance_vs_time_no_selection(p, t_grid, repetitions)?;
    let points: Vec<(f64, f64)> = curve.iter().map(|c| (c.t, c.variance)).collect();
    let (t_star, nu_star, grid_min_variance) = optimal_nu_from_curve(p.final_time(), &points)?;
    Ok(OptimalNu {
        t_star,
        nu_star,
        grid_min_variance,
        curve,
    })
}

/// Spread of the estimator for one resampling scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct ResamplerVariance {
    pub resampler: ResamplerKind,
    /// Weighted ratio estimates at `T` in repetition order.
    pub estimates: Vec<f64>,
    /// `ṽ` at `T`.
    pub variance: f64,
    pub variance_se: f64,
    /// Variance of the weighted estimator at every fine time `kδt`, `k = 0..=νκ`.
    pub variance_path: Vec<f64>,
}

/// Runs each scheme `repetitions` times. Repetition `r` uses the same seed for
/// every scheme, so the initial walkers are shared.
pub fn compare_resamplers(
    base: &ModelParams,
    kinds: &[ResamplerKind],
    repetitions: usize,
) -> Result<Vec<ResamplerVariance>, LabError> {
    if repetitions < 2 {
        return Err(LabError::Config(
            "at least two repetitions are needed for a variance".into(),
        ));
    }
    kinds
        .iter()
        .map(|&kind| {
            let p = base.with_resampler(kind);
            let runs: Vec<dmc_core::Result<(f64, Vec<f64>)>> = (0..repetitions)
                .into_par_iter()
                .map(|r| {
                    let (result, path) = run_dmc_with_path(&p.with_seed(derive_seed(base.seed(), 0, r as u64)))?;
                    Ok((result.e_ratio, path))
                })
                .collect();
            let runs = runs.into_iter().collect::<dmc_core::Result<Vec<_>>>()?;
            let estimates: Vec<f64> = runs.iter().map(|(e, _)| *e).collect();
            let steps = runs[0].1.len();
            let variance_path = (0..steps)
                .map(|k| sample_variance(&runs.iter().map(|(_, path)| path[k]).collect::<Vec<f64>>()))
                .collect();
            Ok(ResamplerVariance {
                resampler: kind,
                variance: sample_variance(&estimates),
                variance_se: variance_standard_error(&estimates),
                estimates,
                variance_path,
            })
        })
        .collect()
}
