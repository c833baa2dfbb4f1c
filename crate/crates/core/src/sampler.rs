//! Walker propagation.
//!
//! `Y = X²` is a square-root process, `dY = (3 - 2ωY)dt + 2√Y dW`, i.e. a
//! time-changed squared 3-D Bessel process. Its transition can therefore be
//! drawn exactly from one Gaussian and one uniform:
//!
//! ```text
//! X_{s+Δ} = ((e^{-ωΔ} X_s + G √((1-e^{-2ωΔ})/(2ω)))² - (1-e^{-2ωΔ})/ω · ln U)^{1/2}
//! ```
//!
//! Letting `Δ → ∞` gives the invariant law `2ψ_I² 1_{x>0}`.

use alloc::vec::Vec;

use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{finite, Error, Result};
use crate::model::{ModelParams, Scheme};
use crate::rng::open_closed_uniform;

/// Positions of one walker over a block: the particle `ξ^i_n`.
///
/// `positions[k]` is the position after `k + 1` fine steps from `start`; the
/// last entry is the one carried to selection.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct WalkerBlock {
    start: f64,
    positions: Vec<f64>,
}

impl WalkerBlock {
    pub fn new(start: f64, positions: Vec<f64>) -> Result<Self> {
        check_position(start)?;
        for &x in &positions {
            check_position(x)?;
        }
        Ok(WalkerBlock { start, positions })
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    /// Final position `ξ^i_{n,κ}`; the start when the block is empty.
    pub fn last(&self) -> f64 {
        self.positions.last().copied().unwrap_or(self.start)
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// `Σ_k y_k⁴`, the exponent of the block weight up to the factor `-θδt`.
    pub fn sum_fourth_powers(&self) -> f64 {
        self.positions.iter().map(|&y| fourth(y)).sum()
    }
}

#[inline]
pub(crate) fn fourth(y: f64) -> f64 {
    let y2 = y * y;
    y2 * y2
}

fn check_position(x: f64) -> Result<f64> {
    let x = finite("x", x)?;
    if x > 0.0 {
        Ok(x)
    } else {
        Err(Error::NonPositivePosition(x))
    }
}

/// One draw from the invariant law: `(G² - 2 ln U)^{1/2} / √(2ω)`.
pub fn sample_invariant<R: RngCore + ?Sized>(rng: &mut R, p: &ModelParams) -> f64 {
    let g: f64 = StandardNormal.sample(rng);
    let u = open_closed_uniform(rng);
    libm::sqrt(g * g - 2.0 * libm::log(u)) / libm::sqrt(2.0 * p.omega())
}

/// Precomputed coefficients of the exact transition over a fixed increment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactKernel {
    decay: f64,
    noise_sd: f64,
    log_coef: f64,
}

impl ExactKernel {
    pub fn new(omega: f64, dt: f64) -> Self {
        // 1 - e^{-2ωΔ}, accurate for small Δ
        let spread = -libm::expm1(-2.0 * omega * dt);
        ExactKernel {
            decay: libm::exp(-omega * dt),
            noise_sd: libm::sqrt(spread / (2.0 * omega)),
            log_coef: spread / omega,
        }
    }

    /// Next position from the Gaussian `g` and the uniform `u ∈ (0, 1]`.
    #[inline]
    pub fn apply(&self, x: f64, g: f64, u: f64) -> f64 {
        let a = self.decay * x + g * self.noise_sd;
        libm::sqrt(a * a - self.log_coef * libm::log(u))
    }
}

/// Draws `X_{s+dt}` given `X_s = x_s` from the exact conditional law.
pub fn exact_transition<R: RngCore + ?Sized>(x_s: f64, dt: f64, rng: &mut R, p: &ModelParams) -> Result<f64> {
    let x_s = check_position(x_s)?;
    let dt = finite("dt", dt)?;
    if dt < 0.0 {
        return Err(Error::InvalidParameter {
            name: "dt",
            reason: "must be nonnegative",
        });
    }
    let kernel = ExactKernel::new(p.omega(), dt);
    let g: f64 = StandardNormal.sample(rng);
    let u = open_closed_uniform(rng);
    if dt == 0.0 {
        return Ok(x_s);
    }
    Ok(kernel.apply(x_s, g, u))
}

/// One step of the explicit scheme with Brownian increment `dw`:
/// `((x(1-ωδt) + dw/(1-ωδt))² + 2δt)^{1/2}`, using the fine step of `p`.
pub fn explicit_step(x_k: f64, dw: f64, p: &ModelParams) -> Result<f64> {
    let x_k = check_position(x_k)?;
    let dw = finite("dW", dw)?;
    let dt = p.dt();
    let bound = 1.0 / p.omega();
    if dt >= bound {
        return Err(Error::UnstableTimeStep { dt, bound });
    }
    Ok(explicit_update(x_k, dw, 1.0 - p.omega() * dt, dt))
}

#[inline]
fn explicit_update(x: f64, dw: f64, contraction: f64, dt: f64) -> f64 {
    let a = x * contraction + dw / contraction;
    libm::sqrt(a * a + 2.0 * dt)
}

/// Mutation of one walker over a block of `κ` fine steps.
///
/// Both schemes consume one Gaussian and one uniform per step in the same
/// order, so runs that differ only in the scheme are driven by the same
/// Brownian increments.
pub fn simulate_block<R: RngCore + ?Sized>(start: f64, p: &ModelParams, rng: &mut R) -> Result<WalkerBlock> {
    let mut block = WalkerBlock::default();
    let kernel = ExactKernel::new(p.omega(), p.dt());
    propagate_into(start, p, &kernel, rng, &mut block)?;
    Ok(block)
}

/// Refills `block` in place; returns `Σ y_k⁴` over the new positions.
pub(crate) fn propagate_into<R: RngCore + ?Sized>(
    start: f64,
    p: &ModelParams,
    kernel: &ExactKernel,
    rng: &mut R,
    block: &mut WalkerBlock,
) -> Result<f64> {
    let start = check_position(start)?;
    let kappa = p.steps_per_block();
    block.start = start;
    block.positions.clear();
    block.positions.reserve(kappa);
    let mut x = start;
    let mut sum4 = 0.0;
    match p.scheme() {
        Scheme::Exact => {
            for _ in 0..kappa {
                let g: f64 = StandardNormal.sample(rng);
                let u = open_closed_uniform(rng);
                x = kernel.apply(x, g, u);
                sum4 += fourth(x);
                block.positions.push(x);
            }
        }
        Scheme::Explicit => {
            let dt = p.dt();
            if dt * p.omega() >= 1.0 {
                return Err(Error::UnstableTimeStep {
                    dt,
                    bound: 1.0 / p.omega(),
                });
            }
            let contraction = 1.0 - p.omega() * dt;
            let sd = libm::sqrt(dt);
            for _ in 0..kappa {
                let g: f64 = StandardNormal.sample(rng);
                let _coupling = open_closed_uniform(rng);
                x = explicit_update(x, sd * g, contraction, dt);
                sum4 += fourth(x);
                block.positions.push(x);
            }
        }
    }
    if !(x > 0.0 && x.is_finite()) {
        return Err(Error::NonPositivePosition(x));
    }
    Ok(sum4)
}
