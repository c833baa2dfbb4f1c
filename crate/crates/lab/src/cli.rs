//! The `dmc` command line.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use dmc_core::{run_dmc, KeepFactor, ResamplerKind, Scheme, SpectralModel};

use crate::config::{Overrides, RunConfig};
use crate::error::LabError;
use crate::experiments::{estimate_optimal_nu, fine_time_grid, run_sweep, SweepAxis, SweepSpec};
use crate::output::{
    config_comment, optimal_nu_row, run_row, spectral_row, sweep_row, write_csv, OPTIMAL_NU_HEADER, RUN_HEADER,
    SPECTRAL_HEADER, SWEEP_HEADER,
};
use crate::plot::LinePlot;
use crate::selftest::run_selftest;

#[derive(Debug, Parser)]
#[command(name = "dmc", version, about = "Diffusion Monte Carlo for the quartic oscillator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub flags: Flags,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// One run; prints both final estimators.
    Run,
    /// Error and variance over repetitions along one parameter axis.
    Sweep,
    /// Spectral reference: ground energy, gap and DMC energy at T.
    Spectral,
    /// Variance of the unselected estimator along time and the implied ν.
    OptimalNu,
    /// Quick invariant checks.
    Selftest,
}

#[derive(Debug, Args, Default)]
pub struct Flags {
    /// JSON configuration file; flags override its values.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub omega: Option<f64>,
    #[arg(long, global = true)]
    pub theta: Option<f64>,
    /// Final time.
    #[arg(long = "T", global = true)]
    pub final_time: Option<f64>,
    /// Requested fine time step.
    #[arg(long, global = true)]
    pub dt: Option<f64>,
    /// Number of blocks (reconfigurations + 1).
    #[arg(long, global = true)]
    pub nu: Option<usize>,
    #[arg(long, global = true)]
    pub walkers: Option<usize>,
    #[arg(long, global = true)]
    pub resampler: Option<ResamplerKind>,
    #[arg(long, global = true)]
    pub scheme: Option<Scheme>,
    /// Keep factor of the correlated multinomial scheme.
    #[arg(long, global = true)]
    pub keep_factor: Option<KeepFactor>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Repetitions per sweep point or variance curve.
    #[arg(long, global = true)]
    pub reps: Option<usize>,
    /// Odd basis functions in the spectral reference.
    #[arg(long, global = true)]
    pub basis_size: Option<usize>,
    /// Sweep axis: walkers, dt or reconfigurations.
    #[arg(long, global = true)]
    pub axis: Option<SweepAxis>,
    /// Comma-separated sweep values.
    #[arg(long, global = true, value_delimiter = ',')]
    pub values: Option<Vec<f64>>,
    /// Output CSV path; standard output when absent.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Also write an SVG chart next to the output.
    #[arg(long, global = true)]
    pub plot: bool,
    /// Worker threads for repetitions.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

impl Flags {
    fn overrides(&self) -> Overrides {
        Overrides {
            omega: self.omega,
            theta: self.theta,
            final_time: self.final_time,
            dt: self.dt,
            nu: self.nu,
            walkers: self.walkers,
            resampler: self.resampler,
            scheme: self.scheme,
            keep_factor: self.keep_factor,
            seed: self.seed,
            reps: self.reps,
            basis_size: self.basis_size,
            axis: self.axis,
            values: self.values.clone(),
            out: self.out.clone(),
            plot: self.plot,
            threads: self.threads,
        }
    }
}

/// Parses arguments and runs the subcommand. Data goes to `--out` or to
/// `stdout`; argument errors come back as [`LabError::Config`] carrying
/// clap's message (help and version requests print and succeed).
pub fn run<I, T>(args: I, stdout: &mut dyn Write) -> Result<(), LabError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            write!(stdout, "{e}")?;
            return Ok(());
        }
        Err(e) => return Err(LabError::Config(e.to_string().trim_end().to_string())),
    };
    let mut config = match &cli.flags.config {
        Some(path) => RunConfig::from_json(
            &fs::read_to_string(path).map_err(|e| LabError::Config(format!("cannot read {}: {e}", path.display())))?,
        )?,
        None => RunConfig::default(),
    };
    config.apply(&cli.flags.overrides());
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.threads.unwrap_or(0))
        .build()
        .map_err(|e| LabError::Internal(e.to_string()))?;
    let mut buffer = Vec::new();
    let result = pool.install(|| dispatch(&cli.command, &config, &mut buffer));
    stdout.write_all(&buffer)?;
    result
}

fn dispatch(command: &Command, config: &RunConfig, stdout: &mut dyn Write) -> Result<(), LabError> {
    match command {
        Command::Run => run_command(config, stdout),
        Command::Sweep => sweep_command(config, stdout),
        Command::Spectral => spectral_command(config, stdout),
        Command::OptimalNu => optimal_nu_command(config, stdout),
        Command::Selftest => selftest_command(stdout),
    }
}

fn emit(
    config: &RunConfig,
    stdout: &mut dyn Write,
    header: &[&str],
    comment: &str,
    rows: &[Vec<String>],
) -> Result<(), LabError> {
    match &config.out {
        Some(path) => write_csv(fs::File::create(path)?, header, comment, rows),
        None => write_csv(stdout, header, comment, rows),
    }
}

fn emit_plot(config: &RunConfig, default_name: &str, plot: LinePlot) -> Result<(), LabError> {
    if !config.plot {
        return Ok(());
    }
    let path = match &config.out {
        Some(out) => out.with_extension("svg"),
        None => Path::new(default_name).to_path_buf(),
    };
    fs::write(path, plot.to_svg())?;
    Ok(())
}

fn run_command(config: &RunConfig, stdout: &mut dyn Write) -> Result<(), LabError> {
    let p = config.model_params()?;
    let result = run_dmc(&p)?;
    emit(
        config,
        stdout,
        &RUN_HEADER,
        &config_comment(config, Some(&p)),
        &[run_row(&result)],
    )?;
    let trace = result
        .per_block_trace
        .iter()
        .enumerate()
        .map(|(n, &e)| ((n + 1) as f64 * p.block_duration(), e))
        .collect();
    emit_plot(
        config,
        "run.svg",
        LinePlot::new("Estimate after each selection", "t", "energy").with_series("trace", trace),
    )
}

fn reference(config: &RunConfig) -> Result<SpectralModel, LabError> {
    Ok(SpectralModel::new(config.basis_size, config.omega, config.theta)?)
}

fn sweep_command(config: &RunConfig, stdout: &mut dyn Write) -> Result<(), LabError> {
    let base = config.model_params()?;
    let reference = reference(config)?.edmc(config.final_time)?;
    let mut spec = SweepSpec::new(base, config.axis, config.sweep_values(), config.reps, reference);
    spec.nominal_dt = Some(config.dt);
    let rows = run_sweep(&spec)?;
    let data: Vec<Vec<String>> = rows.iter().map(sweep_row).collect();
    emit(
        config,
        stdout,
        &SWEEP_HEADER,
        &config_comment(config, Some(&base)),
        &data,
    )?;
    let points =
        |f: fn(&crate::experiments::SweepRow) -> f64| rows.iter().map(|r| (r.effective_axis_value(), f(r))).collect();
    emit_plot(
        config,
        "sweep.svg",
        LinePlot::new("Error along the sweep", config.axis.name(), "e, v, ṽ")
            .log_log()
            .with_series("e", points(|r| r.mean_abs_error))
            .with_series("v", points(|r| r.error_variance))
            .with_series("ṽ", points(|r| r.estimator_variance)),
    )?;
    if let Some(failed) = rows.iter().find(|r| r.failure.is_some()) {
        return Err(LabError::Experiment(format!(
            "repetition failed at {} = {}: {}",
            config.axis,
            failed.axis_value,
            failed.failure.as_deref().unwrap_or_default()
        )));
    }
    Ok(())
}

fn spectral_command(config: &RunConfig, stdout: &mut dyn Write) -> Result<(), LabError> {
    let model = reference(config)?;
    let edmc = model.edmc(config.final_time)?;
    emit(
        config,
        stdout,
        &SPECTRAL_HEADER,
        &config_comment(config, None),
        &[spectral_row(&model, config.final_time, edmc)],
    )?;
    let curve = (0..=200)
        .map(|i| {
            let t = config.final_time * i as f64 / 200.0;
            model.edmc(t).map(|e| (t, e))
        })
        .collect::<Result<Vec<_>, _>>()?;
    emit_plot(
        config,
        "spectral.svg",
        LinePlot::new("Reference DMC energy", "t", "energy").with_series("reference", curve),
    )
}

fn optimal_nu_command(config: &RunConfig, stdout: &mut dyn Write) -> Result<(), LabError> {
    let config = &RunConfig {
        nu: 1,
        resampler: ResamplerKind::None,
        ..config.clone()
    };
    let p = config.model_params()?;
    let result = estimate_optimal_nu(&p, &fine_time_grid(&p), config.reps)?;
    emit(
        config,
        stdout,
        &OPTIMAL_NU_HEADER,
        &config_comment(config, Some(&p)),
        &[optimal_nu_row(&result)],
    )?;
    emit_plot(
        config,
        "optimal-nu.svg",
        LinePlot::new("Variance without selection", "t", "variance")
            .with_series("ṽ(t)", result.curve.iter().map(|c| (c.t, c.variance)).collect())
            .with_series("CLT proxy", result.curve.iter().map(|c| (c.t, c.clt_proxy)).collect()),
    )
}

fn selftest_command(stdout: &mut dyn Write) -> Result<(), LabError> {
    let checks = run_selftest();
    for c in &checks {
        if c.passed {
            writeln!(stdout, "PASS {}", c.name)?;
        } else {
            writeln!(stdout, "FAIL {}: {}", c.name, c.detail)?;
        }
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    if failed > 0 {
        return Err(LabError::Internal(format!("{failed} self-test check(s) failed")));
    }
    Ok(())
}

/// The single stderr line describing a failure.
pub fn error_line(e: &LabError) -> String {
    format!(
        "error kind={} exit={} message={}",
        e.kind(),
        e.exit_code(),
        serde_json::to_string(&e.to_string()).expect("strings serialize")
    )
}
