//! Quick invariant checks runnable from the command line.

use dmc_core::engine::{init_ensemble, step_block};
use dmc_core::model::{drift, local_energy, potential, trial_function};
use dmc_core::resampling::{block_log_weight, normalize, select, systematic_counts};
use dmc_core::sampler::{exact_transition, explicit_step};
use dmc_core::spectral::{assemble_hamiltonian, eigendecompose, gauss_hermite, hermite_function, Matrix};
use dmc_core::{
    run_dmc, KeepFactor, ModelParams, Purpose, ResamplerKind, RngStream, Scheme, SpectralModel, StreamId, WalkerBlock,
    WeightVector,
};

use crate::config::RunConfig;
use crate::experiments::{fine_time_grid, optimal_nu_from_curve, variance_vs_time_no_selection};
use crate::stats::loglog_slope;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

type Outcome = Result<(), String>;
type CheckFn = fn() -> Outcome;

fn ensure(condition: bool, detail: impl FnOnce() -> String) -> Outcome {
    if condition {
        Ok(())
    } else {
        Err(detail())
    }
}

fn close(a: f64, b: f64, tol: f64) -> Outcome {
    ensure((a - b).abs() <= tol, || {
        format!("{a} differs from {b} by more than {tol}")
    })
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn small(omega: f64, theta: f64) -> Result<ModelParams, String> {
    ModelParams::builder()
        .omega(omega)
        .theta(theta)
        .final_time(0.4)
        .blocks(4)
        .time_step(0.01)
        .walkers(32)
        .seed(5)
        .build()
        .map_err(err)
}

fn model_examples() -> Outcome {
    let p = |omega, theta| small(omega, theta);
    close(potential(0.0, &p(1.0, 2.0)?).map_err(err)?, 0.0, 0.0)?;
    close(potential(1.0, &p(1.0, 0.0)?).map_err(err)?, 0.5, 0.0)?;
    close(potential(2.0, &p(1.0, 2.0)?).map_err(err)?, 34.0, 0.0)?;
    close(drift(1.0, &p(1.0, 0.0)?).map_err(err)?, 0.0, 0.0)?;
    close(drift(0.5, &p(1.0, 0.0)?).map_err(err)?, 1.5, 0.0)?;
    ensure(drift(0.0, &p(1.0, 0.0)?).is_err(), || {
        "drift at the node did not fail".into()
    })?;
    close(local_energy(2.3, &p(1.0, 0.0)?).map_err(err)?, 1.5, 0.0)?;
    close(local_energy(1.0, &p(1.0, 2.0)?).map_err(err)?, 3.5, 0.0)?;
    close(local_energy(-1.0, &p(2.0, 0.5)?).map_err(err)?, 3.5, 0.0)
}

fn sampler_examples() -> Outcome {
    let p = ModelParams::builder()
        .omega(1.0)
        .time_step(0.01)
        .blocks(500)
        .build()
        .map_err(err)?;
    let x = explicit_step(1.0, 0.0, &p).map_err(err)?;
    close(x, 1.0001f64.sqrt(), 1e-15)?;
    let mut rng = RngStream::new(1, StreamId::new(0, 0, Purpose::Auxiliary));
    for i in 0..1000 {
        let dw = (i as f64 - 500.0) * 0.01;
        let y = explicit_step(0.3, dw, &p).map_err(err)?;
        ensure(y >= (2.0 * p.dt()).sqrt(), || {
            format!("explicit step {y} below the floor")
        })?;
        let z = exact_transition(0.3, p.dt(), &mut rng, &p).map_err(err)?;
        ensure(z > 0.0, || format!("exact transition gave {z}"))?;
    }
    close(exact_transition(0.7, 0.0, &mut rng, &p).map_err(err)?, 0.7, 0.0)
}

fn weight_examples() -> Outcome {
    let p = ModelParams::builder()
        .theta(2.0)
        .final_time(0.005)
        .blocks(1)
        .steps_per_block(1)
        .build()
        .map_err(err)?;
    let block = WalkerBlock::new(1.0, vec![1.0]).map_err(err)?;
    close(block_log_weight(&block, &p), -0.01, 1e-15)?;
    let w = normalize(vec![0.0, -1e6]).map_err(err)?;
    close(w.rho()[0], 1.0, 1e-15)?;
    let w = normalize(vec![3.0; 4]).map_err(err)?;
    ensure(w.rho().iter().all(|&r| r == 0.25), || format!("{:?}", w.rho()))
}

fn selection_examples() -> Outcome {
    let w = WeightVector::from_probabilities(vec![0.5, 0.5, 0.0, 0.0]).map_err(err)?;
    ensure(systematic_counts(&w, 0.3) == vec![2, 2, 0, 0], || {
        format!("{:?}", systematic_counts(&w, 0.3))
    })?;
    let degenerate = WeightVector::from_probabilities(vec![0.0, 1.0, 0.0, 0.0]).map_err(err)?;
    let uniform = WeightVector::from_probabilities(vec![0.25; 4]).map_err(err)?;
    let mut rng = RngStream::new(2, StreamId::new(0, 0, Purpose::Auxiliary));
    for kind in ResamplerKind::ALL.into_iter().filter(|&k| k != ResamplerKind::None) {
        let out = select(kind, KeepFactor::InverseMax, &degenerate, &mut rng).map_err(err)?;
        ensure(out.parents().iter().all(|&j| j == 1), || {
            format!("{kind}: {:?}", out.parents())
        })?;
        let out = select(kind, KeepFactor::InverseMax, &uniform, &mut rng).map_err(err)?;
        ensure(out.offspring_counts().iter().sum::<usize>() == 4, || {
            format!("{kind}: population changed")
        })?;
        if kind != ResamplerKind::Multinomial {
            ensure(out.offspring_counts() == [1, 1, 1, 1], || {
                format!("{kind}: {:?}", out.offspring_counts())
            })?;
        }
    }
    Ok(())
}

fn harmonic_exactness() -> Outcome {
    for omega in [0.5, 1.0, 2.0] {
        for kind in ResamplerKind::ALL {
            for scheme in [Scheme::Exact, Scheme::Explicit] {
                let p = small(omega, 0.0)?
                    .to_builder()
                    .resampler(kind)
                    .scheme(scheme)
                    .build()
                    .map_err(err)?;
                let r = run_dmc(&p).map_err(err)?;
                let all = [r.e_ratio, r.e_mean_after_selection]
                    .into_iter()
                    .chain(r.per_block_trace.iter().copied());
                for e in all {
                    close(e, 1.5 * omega, 0.0).map_err(|m| format!("ω={omega} {kind} {scheme}: {m}"))?;
                }
            }
        }
        let m = SpectralModel::new(20, omega, 0.0).map_err(err)?;
        close(m.edmc(3.0).map_err(err)?, 1.5 * omega, 0.0)?;
    }
    Ok(())
}

fn engine_invariants() -> Outcome {
    let p = small(1.0, 2.0)?;
    let a = run_dmc(&p).map_err(err)?;
    let b = run_dmc(&p).map_err(err)?;
    ensure(a == b, || "identical seeds gave different runs".into())?;
    ensure(a.per_block_trace.len() == p.blocks(), || "trace length".into())?;
    for kind in ResamplerKind::ALL {
        let q = p.with_resampler(kind);
        let mut state = init_ensemble(&q);
        for _ in 0..q.blocks() {
            step_block(&mut state, &q).map_err(err)?;
            ensure(state.starts().len() == q.walkers(), || {
                format!("{kind}: population changed")
            })?;
            ensure(state.starts().iter().all(|&x| x > 0.0), || {
                format!("{kind}: nonpositive walker")
            })?;
        }
        let r = run_dmc(&q).map_err(err)?;
        ensure(r.e_ratio >= 1.5 && r.e_mean_after_selection >= 1.5, || {
            format!("{kind}: estimator below 3ω/2")
        })?;
    }
    Ok(())
}

fn quadrature_examples() -> Outcome {
    let sqrt_pi = std::f64::consts::PI.sqrt();
    let q = gauss_hermite(1).map_err(err)?;
    close(q.nodes()[0], 0.0, 0.0)?;
    close(q.weights()[0], sqrt_pi, 1e-15)?;
    let q = gauss_hermite(2).map_err(err)?;
    close(q.nodes()[1], std::f64::consts::FRAC_1_SQRT_2, 1e-15)?;
    close(q.weights()[0], sqrt_pi / 2.0, 1e-15)?;
    for x in [0.1, 1.0, 3.0] {
        close(hermite_function(1, 1.0, x), trial_function(x, 1.0), 1e-12)?;
    }
    for k in (1..40).step_by(2) {
        close(hermite_function(k, 1.0, 0.0), 0.0, 0.0)?;
    }
    Ok(())
}

fn spectral_examples() -> Outcome {
    let a = assemble_hamiltonian(4, 1.0, 1.0).map_err(err)?;
    close(a.get(0, 0), 5.25, 1e-13)?;
    for i in 0..4 {
        for j in 0..4 {
            ensure(a.get(i, j) == a.get(j, i), || format!("asymmetric at ({i},{j})"))?;
        }
    }
    let e = eigendecompose(&Matrix::from_rows(&[&[2.0, 1.0], &[1.0, 2.0]])).map_err(err)?;
    close(e.values[0], 1.0, 1e-14)?;
    close(e.values[1], 3.0, 1e-14)?;
    let m = SpectralModel::new(40, 1.0, 2.0).map_err(err)?;
    close(m.edmc(1e3).map_err(err)?, m.ground_energy(), 1e-12)?;
    let e0 = |theta| {
        SpectralModel::new(40, 1.0, theta)
            .map(|m| m.ground_energy())
            .map_err(err)
    };
    let (a, b, c) = (e0(2.0)?, e0(0.5)?, e0(0.0)?);
    ensure(a > b && b > c, || format!("E0 not monotone in θ: {a}, {b}, {c}"))?;
    close(c, 1.5, 1e-12)
}

fn experiment_examples() -> Outcome {
    let s = loglog_slope(
        &[250.0, 1000.0, 4000.0],
        &[0.4 / 250f64.sqrt(), 0.4 / 1000f64.sqrt(), 0.4 / 4000f64.sqrt()],
    )
    .ok_or("no slope")?;
    close(s, -0.5, 1e-12)?;
    let curve: Vec<(f64, f64)> = (1..=40)
        .map(|k| (k as f64 * 0.0125, (k as f64 * 0.0125 - 0.25).powi(2)))
        .collect();
    let (_, nu, _) = optimal_nu_from_curve(5.0, &curve).map_err(err)?;
    ensure(nu == 20, || format!("ν* = {nu}"))?;
    let p = ModelParams::builder()
        .theta(0.0)
        .final_time(0.2)
        .blocks(1)
        .time_step(0.01)
        .walkers(16)
        .resampler(ResamplerKind::None)
        .build()
        .map_err(err)?;
    for c in variance_vs_time_no_selection(&p, &fine_time_grid(&p), 3).map_err(err)? {
        ensure(c.variance == 0.0 && c.clt_proxy == 0.0, || format!("t={}: {c:?}", c.t))?;
    }
    Ok(())
}

fn config_examples() -> Outcome {
    let c = RunConfig::from_json("").map_err(err)?;
    ensure(c == RunConfig::default(), || "empty config is not the default".into())?;
    let explicit = RunConfig::from_json(r#"{"dt": 0.2, "omega": 3, "scheme": "explicit"}"#).map_err(err)?;
    ensure(explicit.model_params().is_err(), || {
        "unstable explicit step accepted".into()
    })?;
    ensure(RunConfig::from_json(&c.to_json()).map_err(err)? == c, || {
        "round trip".into()
    })
}

/// Runs every check; never panics on a failed check.
pub fn run_selftest() -> Vec<Check> {
    let checks: [(&'static str, CheckFn); 10] = [
        ("model-examples", model_examples),
        ("sampler-examples", sampler_examples),
        ("weight-examples", weight_examples),
        ("selection-examples", selection_examples),
        ("harmonic-exactness", harmonic_exactness),
        ("engine-invariants", engine_invariants),
        ("quadrature-examples", quadrature_examples),
        ("spectral-examples", spectral_examples),
        ("experiment-examples", experiment_examples),
        ("config-examples", config_examples),
    ];
    checks
        .into_iter()
        .map(|(name, f)| match f() {
            Ok(()) => Check {
                name,
                passed: true,
                detail: String::new(),
            },
            Err(detail) => Check {
                name,
                passed: false,
                detail,
            },
        })
        .collect()
}
