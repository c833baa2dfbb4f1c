//! Closed-form quantities of the toy model and the run parameters.
//!
//! The trial function is the first excited state of the harmonic part,
//! `ψ_I(x) = √(2ω) (ω/π)^{1/4} x e^{-ωx²/2}`, whose node at the origin the
//! walkers never cross. With it the drift is `1/x - ωx` and the local energy
//! `3ω/2 + θx⁴`.

use core::f64::consts::PI;
use core::fmt;
use core::str::FromStr;

use crate::error::{finite, Error, Result};

/// Propagation scheme for the walkers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Scheme {
    /// Exact sampling of the conditional law of `X_{s+dt}` given `X_s`.
    #[default]
    Exact,
    /// Positivity-preserving explicit scheme
    /// `X' = ((x(1-ωδt) + ΔW/(1-ωδt))² + 2δt)^{1/2}`.
    Explicit,
}

/// Selection step applied between blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum ResamplerKind {
    #[default]
    Multinomial,
    CorrelatedMultinomial,
    Residual,
    Stratified,
    Systematic,
    StratifiedRemainder,
    /// No selection: weights accumulate multiplicatively across blocks.
    None,
}

impl ResamplerKind {
    pub const ALL: [ResamplerKind; 7] = [
        ResamplerKind::Multinomial,
        ResamplerKind::CorrelatedMultinomial,
        ResamplerKind::Residual,
        ResamplerKind::Stratified,
        ResamplerKind::Systematic,
        ResamplerKind::StratifiedRemainder,
        ResamplerKind::None,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ResamplerKind::Multinomial => "multinomial",
            ResamplerKind::CorrelatedMultinomial => "correlated-multinomial",
            ResamplerKind::Residual => "residual",
            ResamplerKind::Stratified => "stratified",
            ResamplerKind::Systematic => "systematic",
            ResamplerKind::StratifiedRemainder => "stratified-remainder",
            ResamplerKind::None => "none",
        }
    }
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Exact => "exact",
            Scheme::Explicit => "explicit",
        }
    }
}

/// Choice of the keep factor `ε` in the correlated multinomial scheme: a
/// walker keeps its own final position with probability `ε g(ξ)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum KeepFactor {
    /// `ε = 1 / max_i g(ξ^i)`; the heaviest walker always keeps its position.
    #[default]
    InverseMax,
    /// `ε = 1`; admissible because `g ≤ 1` for this model.
    Unit,
}

impl KeepFactor {
    pub fn name(self) -> &'static str {
        match self {
            KeepFactor::InverseMax => "inverse-max",
            KeepFactor::Unit => "unit",
        }
    }
}

macro_rules! impl_display_fromstr {
    ($ty:ty, $what:literal, [$($variant:expr),* $(,)?]) => {
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.name())
            }
        }

        impl FromStr for $ty {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                let s = s.trim();
                [$($variant),*]
                    .into_iter()
                    .find(|v: &$ty| v.name().eq_ignore_ascii_case(s))
                    .ok_or(Error::InvalidParameter {
                        name: $what,
                        reason: "unknown variant",
                    })
            }
        }
    };
}

impl_display_fromstr!(Scheme, "scheme", [Scheme::Exact, Scheme::Explicit]);
impl_display_fromstr!(
    ResamplerKind,
    "resampler",
    [
        ResamplerKind::Multinomial,
        ResamplerKind::CorrelatedMultinomial,
        ResamplerKind::Residual,
        ResamplerKind::Stratified,
        ResamplerKind::Systematic,
        ResamplerKind::StratifiedRemainder,
        ResamplerKind::None,
    ]
);
impl_display_fromstr!(KeepFactor, "keep_factor", [KeepFactor::InverseMax, KeepFactor::Unit]);

/// Physical and numerical constants of one DMC run.
///
/// The fine step `δt = T/(νκ)` is derived once at construction; `ν` is the
/// number of blocks (so `ν - 1` reconfigurations) and `κ` the number of fine
/// steps per block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    omega: f64,
    theta: f64,
    final_time: f64,
    blocks: usize,
    steps_per_block: usize,
    dt: f64,
    walkers: usize,
    seed: u64,
    scheme: Scheme,
    resampler: ResamplerKind,
    keep_factor: KeepFactor,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams::builder().build().expect("default parameters are valid")
    }
}

impl ModelParams {
    pub fn builder() -> ModelParamsBuilder {
        ModelParamsBuilder::default()
    }

    /// A builder pre-filled with these parameters. The fine step is carried
    /// through `κ`, so rebuilding without touching `T`, `ν` or `κ` reproduces
    /// the same `δt`.
    pub fn to_builder(&self) -> ModelParamsBuilder {
        ModelParamsBuilder {
            omega: self.omega,
            theta: self.theta,
            final_time: self.final_time,
            blocks: self.blocks,
            steps_per_block: Some(self.steps_per_block),
            time_step: self.dt,
            walkers: self.walkers,
            seed: self.seed,
            scheme: self.scheme,
            resampler: self.resampler,
            keep_factor: self.keep_factor,
        }
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }
    pub fn theta(&self) -> f64 {
        self.theta
    }
    pub fn final_time(&self) -> f64 {
        self.final_time
    }
    /// Number of blocks `ν`.
    pub fn blocks(&self) -> usize {
        self.blocks
    }
    /// Fine steps per block `κ`.
    pub fn steps_per_block(&self) -> usize {
        self.steps_per_block
    }
    /// Fine time step `δt`.
    pub fn dt(&self) -> f64 {
        self.dt
    }
    /// Block duration `Δt = κ δt`.
    pub fn block_duration(&self) -> f64 {
        self.steps_per_block as f64 * self.dt
    }
    pub fn total_steps(&self) -> usize {
        self.blocks * self.steps_per_block
    }
    pub fn walkers(&self) -> usize {
        self.walkers
    }
    pub fn seed(&self) -> u64 {
        self.seed
    }
    pub fn scheme(&self) -> Scheme {
        self.scheme
    }
    pub fn resampler(&self) -> ResamplerKind {
        self.resampler
    }
    pub fn keep_factor(&self) -> KeepFactor {
        self.keep_factor
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_resampler(mut self, resampler: ResamplerKind) -> Self {
        self.resampler = resampler;
        self
    }

    /// The local energy lower bound `3ω/2`.
    pub fn ground_local_energy(&self) -> f64 {
        1.5 * self.omega
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ModelParamsBuilder {
    omega: f64,
    theta: f64,
    final_time: f64,
    blocks: usize,
    steps_per_block: Option<usize>,
    time_step: f64,
    walkers: usize,
    seed: u64,
    scheme: Scheme,
    resampler: ResamplerKind,
    keep_factor: KeepFactor,
}

impl Default for ModelParamsBuilder {
    fn default() -> Self {
        ModelParamsBuilder {
            omega: 1.0,
            theta: 2.0,
            final_time: 5.0,
            blocks: 31,
            steps_per_block: None,
            time_step: 5e-3,
            walkers: 5000,
            seed: 0,
            scheme: Scheme::Exact,
            resampler: ResamplerKind::Multinomial,
            keep_factor: KeepFactor::InverseMax,
        }
    }
}

impl ModelParamsBuilder {
    pub fn omega(mut self, omega: f64) -> Self {
        self.omega = omega;
        self
    }
    pub fn theta(mut self, theta: f64) -> Self {
        self.theta = theta;
        self
    }
    pub fn final_time(mut self, final_time: f64) -> Self {
        self.final_time = final_time;
        self
    }
    /// Number of blocks `ν` (reconfigurations are `ν - 1`).
    pub fn blocks(mut self, blocks: usize) -> Self {
        self.blocks = blocks;
        self
    }
    /// Sets `κ` directly; takes precedence over [`time_step`](Self::time_step).
    pub fn steps_per_block(mut self, kappa: usize) -> Self {
        self.steps_per_block = Some(kappa);
        self
    }
    /// Requested fine step. `κ` becomes `round(T/(ν dt))` (at least 1) and the
    /// effective step is re-derived as `T/(νκ)`.
    pub fn time_step(mut self, dt: f64) -> Self {
        self.time_step = dt;
        self.steps_per_block = None;
        self
    }
    pub fn walkers(mut self, walkers: usize) -> Self {
        self.walkers = walkers;
        self
    }
    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
    pub fn scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }
    pub fn resampler(mut self, resampler: ResamplerKind) -> Self {
        self.resampler = resampler;
        self
    }
    pub fn keep_factor(mut self, keep_factor: KeepFactor) -> Self {
        self.keep_factor = keep_factor;
        self
    }

    pub fn build(self) -> Result<ModelParams> {
        let omega = finite("omega", self.omega)?;
        let theta = finite("theta", self.theta)?;
        let final_time = finite("T", self.final_time)?;
        if omega <= 0.0 {
            return Err(invalid("omega", "must be positive"));
        }
        if theta < 0.0 {
            return Err(invalid("theta", "must be nonnegative"));
        }
        if final_time <= 0.0 {
            return Err(invalid("T", "must be positive"));
        }
        if self.blocks == 0 {
            return Err(invalid("nu", "must be at least 1"));
        }
        if self.walkers == 0 {
            return Err(invalid("walkers", "must be at least 1"));
        }
        let kappa = match self.steps_per_block {
            Some(0) => return Err(invalid("kappa", "must be at least 1")),
            Some(k) => k,
            None => {
                let dt = finite("dt", self.time_step)?;
                if dt <= 0.0 {
                    return Err(invalid("dt", "must be positive"));
                }
                let k = libm::round(final_time / (self.blocks as f64 * dt));
                if k.is_nan() || k > u32::MAX as f64 {
                    return Err(invalid("dt", "too many steps per block"));
                }
                (k as usize).max(1)
            }
        };
        let total = self.blocks as f64 * kappa as f64;
        let dt = final_time / total;
        // δt·ν·κ reproduces T to within one rounding.
        debug_assert!((dt * total - final_time).abs() <= 2.0 * f64::EPSILON * final_time);

        if self.scheme == Scheme::Explicit {
            let bound = 1.0 / (2.0 * omega);
            if dt >= bound {
                return Err(Error::UnstableTimeStep { dt, bound });
            }
        }

        Ok(ModelParams {
            omega,
            theta,
            final_time,
            blocks: self.blocks,
            steps_per_block: kappa,
            dt,
            walkers: self.walkers,
            seed: self.seed,
            scheme: self.scheme,
            resampler: self.resampler,
            keep_factor: self.keep_factor,
        })
    }
}

fn invalid(name: &'static str, reason: &'static str) -> Error {
    Error::InvalidParameter { name, reason }
}

/// `V(x) = ω²x²/2 + θx⁴`.
pub fn potential(x: f64, p: &ModelParams) -> Result<f64> {
    let x = finite("x", x)?;
    let x2 = x * x;
    Ok(0.5 * p.omega * p.omega * x2 + p.theta * x2 * x2)
}

/// Drift `b(x) = ψ_I'/ψ_I = 1/x - ωx`, defined on the positive half-line only.
pub fn drift(x: f64, p: &ModelParams) -> Result<f64> {
    let x = finite("x", x)?;
    if x <= 0.0 {
        return Err(Error::NonPositivePosition(x));
    }
    Ok(1.0 / x - p.omega * x)
}

/// Local energy `E_L(x) = Hψ_I/ψ_I = 3ω/2 + θx⁴`.
pub fn local_energy(x: f64, p: &ModelParams) -> Result<f64> {
    let x = finite("x", x)?;
    let x2 = x * x;
    Ok(1.5 * p.omega + p.theta * x2 * x2)
}

/// The trial function `ψ_I`.
pub fn trial_function(x: f64, omega: f64) -> f64 {
    libm::sqrt(2.0 * omega) * libm::pow(omega / PI, 0.25) * x * libm::exp(-0.5 * omega * x * x)
}

/// Density `2ψ_I(x)²` on `x > 0`, zero elsewhere: the invariant law of the walkers.
pub fn invariant_density(x: f64, p: &ModelParams) -> Result<f64> {
    let x = finite("x", x)?;
    if x <= 0.0 {
        return Ok(0.0);
    }
    let psi = trial_function(x, p.omega);
    Ok(2.0 * psi * psi)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(omega: f64, theta: f64) -> ModelParams {
        ModelParams::builder().omega(omega).theta(theta).build().unwrap()
    }

    // Adaptive Simpson on [a, b].
    fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
        #[allow(clippy::too_many_arguments)]
        fn rec(
            f: &dyn Fn(f64) -> f64,
            a: f64,
            b: f64,
            fa: f64,
            fm: f64,
            fb: f64,
            whole: f64,
            tol: f64,
            depth: u32,
        ) -> f64 {
            let m = 0.5 * (a + b);
            let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
            let (flm, frm) = (f(lm), f(rm));
            let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
            let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
            if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
                left + right + (left + right - whole) / 15.0
            } else {
                rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
                    + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
            }
        }
        let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
        let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
        rec(f, a, b, fa, fm, fb, whole, tol, 50)
    }

    #[test]
    fn potential_examples() {
        assert_eq!(potential(0.0, &params(1.0, 2.0)).unwrap(), 0.0);
        assert_eq!(potential(1.0, &params(1.0, 0.0)).unwrap(), 0.5);
        assert_eq!(potential(2.0, &params(1.0, 2.0)).unwrap(), 34.0);
    }

    #[test]
    fn drift_examples() {
        let p = params(1.0, 2.0);
        assert_eq!(drift(1.0, &p).unwrap(), 0.0);
        assert_eq!(drift(0.5, &p).unwrap(), 1.5);
        assert_eq!(drift(0.0, &p), Err(Error::NonPositivePosition(0.0)));
        assert!(drift(-1.0, &p).is_err());
    }

    #[test]
    fn drift_blows_up_at_node_and_decreases() {
        let p = params(1.3, 0.0);
        assert!(drift(1e-12, &p).unwrap() > 1e11);
        let xs: alloc::vec::Vec<f64> = (1..400).map(|i| i as f64 * 0.025).collect();
        for w in xs.windows(2) {
            assert!(drift(w[0], &p).unwrap() > drift(w[1], &p).unwrap());
        }
    }

    #[test]
    fn local_energy_examples() {
        assert_eq!(local_energy(2.3, &params(1.0, 0.0)).unwrap(), 1.5);
        assert_eq!(local_energy(1.0, &params(1.0, 2.0)).unwrap(), 3.5);
        assert_eq!(local_energy(-1.0, &params(2.0, 0.5)).unwrap(), 3.5);
    }

    #[test]
    fn non_finite_inputs_are_rejected() {
        let p = params(1.0, 1.0);
        assert!(matches!(potential(f64::NAN, &p), Err(Error::NonFinite { .. })));
        assert!(matches!(local_energy(f64::INFINITY, &p), Err(Error::NonFinite { .. })));
        assert!(matches!(drift(f64::NAN, &p), Err(Error::NonFinite { .. })));
        assert!(matches!(invariant_density(f64::NAN, &p), Err(Error::NonFinite { .. })));
        assert!(ModelParams::builder().omega(f64::NAN).build().is_err());
    }

    #[test]
    fn invariant_density_support_and_normalization() {
        for &omega in &[0.5, 1.0, 2.0] {
            let p = params(omega, 0.0);
            assert_eq!(invariant_density(-1.0, &p).unwrap(), 0.0);
            assert_eq!(invariant_density(0.0, &p).unwrap(), 0.0);
            // Unit pieces so the first Simpson panel cannot sit entirely in the tail.
            let scale = 1.0 / libm::sqrt(omega);
            let f = |x: f64| invariant_density(x, &p).unwrap();
            let mass: f64 = (0..12)
                .map(|i| adaptive_simpson(&f, i as f64 * scale, (i + 1) as f64 * scale, 1e-15))
                .sum();
            assert!((mass - 1.0).abs() < 1e-10, "omega={omega} mass={mass}");
        }
    }

    #[test]
    fn builder_reconciles_steps_per_block() {
        let p = ModelParams::default();
        assert_eq!(p.blocks(), 31);
        assert_eq!(p.steps_per_block(), 32);
        assert!((p.dt() * 31.0 * 32.0 - 5.0).abs() <= 2.0 * f64::EPSILON * 5.0);

        let p = ModelParams::builder().blocks(51).time_step(5e-3).build().unwrap();
        assert_eq!(p.steps_per_block(), 20);
        assert_eq!(p.dt(), 5.0 / 1020.0);

        let p = ModelParams::builder()
            .blocks(1)
            .steps_per_block(7)
            .final_time(0.7)
            .build()
            .unwrap();
        assert_eq!(p.total_steps(), 7);
        assert!((p.dt() - 0.1).abs() < 1e-15);
        assert_eq!(p.to_builder().build().unwrap(), p);
    }

    #[test]
    fn builder_rejects_invalid_values() {
        assert!(ModelParams::builder().omega(0.0).build().is_err());
        assert!(ModelParams::builder().theta(-1.0).build().is_err());
        assert!(ModelParams::builder().final_time(0.0).build().is_err());
        assert!(ModelParams::builder().blocks(0).build().is_err());
        assert!(ModelParams::builder().walkers(0).build().is_err());
        assert!(ModelParams::builder().steps_per_block(0).build().is_err());
        let err = ModelParams::builder()
            .omega(3.0)
            .blocks(1)
            .final_time(1.0)
            .time_step(0.2)
            .scheme(Scheme::Explicit)
            .build()
            .unwrap_err();
        assert!(matches!(err, Error::UnstableTimeStep { .. }));
    }

    #[test]
    fn enum_names_round_trip() {
        for r in ResamplerKind::ALL {
            assert_eq!(r.name().parse::<ResamplerKind>().unwrap(), r);
        }
        assert_eq!("EXPLICIT".parse::<Scheme>().unwrap(), Scheme::Explicit);
        assert!("metropolis".parse::<Scheme>().is_err());
        assert_eq!("unit".parse::<KeepFactor>().unwrap(), KeepFactor::Unit);
    }
}
