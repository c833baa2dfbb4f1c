//! Gauss–Hermite quadrature for `∫ f(x) e^{-x²} dx`.

use alloc::vec::Vec;

use super::eigen::{eigendecompose, Matrix, MAX_DIM};
use super::hermite::fill_hermite;
use crate::error::{Error, Result};

/// Largest supported number of nodes.
pub const MAX_NODES: usize = MAX_DIM;

#[derive(Debug, Clone, PartialEq)]
pub struct Quadrature {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    /// `weights[i] · e^{nodes[i]²}`, for integrands that carry their own Gaussian.
    scaled_weights: Vec<f64>,
}

impl Quadrature {
    /// Ascending roots of `H_n`.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Weights for `∫ h(x) dx` with `h` already decaying like `e^{-x²}`.
    pub fn scaled_weights(&self) -> &[f64] {
        &self.scaled_weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `Σ w_i f(x_i) ≈ ∫ f(x) e^{-x²} dx`.
    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

/// The `n`-point rule, exact for polynomials of degree `2n - 1`.
///
/// Nodes are the eigenvalues of the Jacobi matrix of the normalized Hermite
/// recurrence, refined by Newton steps on `ψ_n`. Weights come from the
/// Christoffel function `w_i = e^{-x_i²} / Σ_{k<n} ψ_k(x_i)²`.
pub fn gauss_hermite(n: usize) -> Result<Quadrature> {
    if n == 0 || n > MAX_NODES {
        return Err(Error::QuadratureOrder(n));
    }
    let jacobi = Matrix::from_fn(n, |i, j| {
        if i.abs_diff(j) == 1 {
            libm::sqrt(i.max(j) as f64 / 2.0)
        } else {
            0.0
        }
    });
    let mut nodes = eigendecompose(&jacobi)?.values;
    let mut psi = alloc::vec![0.0; n + 1];
    for x in nodes.iter_mut() {
        for _ in 0..3 {
            fill_hermite(*x, &mut psi);
            let derivative = libm::sqrt(2.0 * n as f64) * psi[n - 1] - *x * psi[n];
            if derivative == 0.0 {
                break;
            }
            let step = psi[n] / derivative;
            *x -= step;
            if libm::fabs(step) <= 1e-17 * libm::fabs(*x) {
                break;
            }
        }
    }
    // Exact symmetry; the middle node of an odd rule is exactly zero.
    for i in 0..n / 2 {
        let x = 0.5 * (nodes[n - 1 - i] - nodes[i]);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    let scaled_weights: Vec<f64> = nodes
        .iter()
        .map(|&x| {
            fill_hermite(x, &mut psi[..n]);
            1.0 / psi[..n].iter().map(|p| p * p).sum::<f64>()
        })
        .collect();
    let weights = nodes
        .iter()
        .zip(&scaled_weights)
        .map(|(&x, &w)| w * libm::exp(-x * x))
        .collect();
    Ok(Quadrature {
        nodes,
        weights,
        scaled_weights,
    })
}
