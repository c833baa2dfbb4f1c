//! Deterministic reference energies from a Hermite–Galerkin discretization.
//!
//! The Hamiltonian `H = -½∂² + ½ω²x² + θx⁴` is restricted to the odd
//! functions `{φ_1, φ_3, …, φ_{2n-1}}` of the harmonic oscillator. With `ψ_I = φ_1`
//! as initial state, the imaginary-time solution is
//! `φ(t) = Σ_k u_k e^{-E_k t} φ_k^n`, `u_k = ⟨ψ_I, φ_k^n⟩`, and the DMC energy
//! at time `T` is
//!
//! ```text
//! ⟨Hψ_I, φ(T)⟩ / ⟨ψ_I, φ(T)⟩ = Σ_k u_k² E_k e^{-E_k T} / Σ_k u_k² e^{-E_k T}
//!                             = E_0 + Σ_{k≥1} c_k Δ_k e^{-Δ_k T} / (1 + Σ_{k≥1} c_k e^{-Δ_k T})
//! ```
//!
//! with `Δ_k = E_k - E_0` and `c_k = u_k² / u_0²`. Since `ψ_I` is itself the
//! first basis function, `⟨φ_k^n, φ_1⟩ = u_k` and the projections coincide with
//! the overlaps.

pub mod eigen;
pub mod hermite;
pub mod quadrature;

use alloc::vec::Vec;

pub use eigen::{eigendecompose, Eigen, Matrix};
pub use hermite::{hermite_function, hermite_values};
pub use quadrature::{gauss_hermite, Quadrature};

use crate::error::{finite, Error, Result};

/// Largest basis whose assembly rule (`2n + 8` points) is supported.
pub const MAX_BASIS: usize = (quadrature::MAX_NODES - 8) / 2;

fn check_basis(n: usize) -> Result<()> {
    if n == 0 || n > MAX_BASIS {
        return Err(Error::InvalidParameter {
            name: "basis_size",
            reason: "must be between 1 and 96",
        });
    }
    Ok(())
}

fn check_coefficients(omega: f64, theta: f64) -> Result<()> {
    if finite("omega", omega)? <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "omega",
            reason: "must be positive",
        });
    }
    if finite("theta", theta)? < 0.0 {
        return Err(Error::InvalidParameter {
            name: "theta",
            reason: "must be nonnegative",
        });
    }
    Ok(())
}

/// Galerkin matrix `a_ij = δ_ij ω(2i + 3/2) + θ⟨x⁴ φ_{2i+1}, φ_{2j+1}⟩`,
/// `i, j < n`, with the quartic elements from a `2n + 8` point rule.
pub fn assemble_hamiltonian(n: usize, omega: f64, theta: f64) -> Result<Matrix> {
    check_basis(n)?;
    check_coefficients(omega, theta)?;
    let q = gauss_hermite(2 * n + 8)?;
    // In y = √ω x: ⟨x⁴ φ_a, φ_b⟩ = ω^{-2} ∫ y⁴ ψ_a ψ_b dy.
    let table: Vec<(f64, Vec<f64>)> = q
        .nodes()
        .iter()
        .zip(q.scaled_weights())
        .map(|(&y, &w)| (w * y * y * y * y, hermite_values(y, 2 * n)))
        .collect();
    let scale = theta / (omega * omega);
    let mut a = Matrix::zeros(n);
    for i in 0..n {
        for j in 0..=i {
            let quartic: f64 = table.iter().map(|(w, psi)| w * psi[2 * i + 1] * psi[2 * j + 1]).sum();
            let mut value = scale * quartic;
            if i == j {
                value += omega * (2.0 * i as f64 + 1.5);
            }
            a.set(i, j, value);
            a.set(j, i, value);
        }
    }
    Ok(a)
}

/// Spectrum of the discretized Hamiltonian and the overlaps of `ψ_I` with its
/// eigenvectors. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralModel {
    basis_size: usize,
    omega: f64,
    theta: f64,
    eigenvalues: Vec<f64>,
    overlaps: Vec<f64>,
}

impl SpectralModel {
    pub fn new(basis_size: usize, omega: f64, theta: f64) -> Result<Self> {
        let a = assemble_hamiltonian(basis_size, omega, theta)?;
        let Eigen { values, vectors } = eigendecompose(&a)?;
        // Eigenvector signs are arbitrary; choose u_k ≥ 0.
        let overlaps = (0..basis_size).map(|k| libm::fabs(vectors.get(0, k))).collect();
        Ok(SpectralModel {
            basis_size,
            omega,
            theta,
            eigenvalues: values,
            overlaps,
        })
    }

    pub fn basis_size(&self) -> usize {
        self.basis_size
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// `E_0^n ≤ E_1^n ≤ …`, the odd-sector levels.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// `u_k = ⟨ψ_I, φ_k^n⟩ ≥ 0`.
    pub fn overlaps(&self) -> &[f64] {
        &self.overlaps
    }

    /// `⟨φ_k^n, φ_1⟩`; equal to the overlaps because `ψ_I = φ_1`.
    pub fn projections(&self) -> &[f64] {
        &self.overlaps
    }

    pub fn ground_energy(&self) -> f64 {
        self.eigenvalues[0]
    }

    /// `E_1^n - E_0^n`, or `None` for a one-function basis.
    pub fn gap(&self) -> Option<f64> {
        self.eigenvalues.get(1).map(|e1| e1 - self.eigenvalues[0])
    }

    /// DMC energy at time `t` started from `ψ_I`.
    pub fn edmc(&self, t: f64) -> Result<f64> {
        Ok(self.ground_energy() + self.edmc_excess(t)?)
    }

    /// `edmc(t) - E_0^n`, computed without cancellation.
    pub fn edmc_excess(&self, t: f64) -> Result<f64> {
        if finite("final_time", t)? < 0.0 {
            return Err(Error::InvalidParameter {
                name: "final_time",
                reason: "must be nonnegative",
            });
        }
        let u0 = self.overlaps[0];
        if u0 <= f64::EPSILON {
            return Err(Error::DegenerateDenominator);
        }
        let e0 = self.ground_energy();
        let mut numerator = 0.0;
        let mut denominator = 1.0;
        for (&e, &u) in self.eigenvalues.iter().zip(&self.overlaps).skip(1) {
            let gap = e - e0;
            let c = (u / u0) * (u / u0) * libm::exp(-gap * t);
            numerator += c * gap;
            denominator += c;
        }
        Ok(numerator / denominator)
    }
}

/// DMC energy at time `t` for a basis of `n` odd functions.
pub fn reference_edmc(n: usize, omega: f64, theta: f64, t: f64) -> Result<f64> {
    SpectralModel::new(n, omega, theta)?.edmc(t)
}

/// Lowest odd-sector eigenvalue `E_0^n`.
pub fn reference_ground_energy(n: usize, omega: f64, theta: f64) -> Result<f64> {
    Ok(SpectralModel::new(n, omega, theta)?.ground_energy())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn harmonic_case_is_diagonal() {
        let a = assemble_hamiltonian(6, 1.7, 0.0).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                let expected = if i == j { 1.7 * (2.0 * i as f64 + 1.5) } else { 0.0 };
                assert_eq!(a.get(i, j), expected);
            }
        }
        let m = SpectralModel::new(20, 1.7, 0.0).unwrap();
        for (k, &e) in m.eigenvalues().iter().enumerate() {
            assert!((e - 1.7 * (2.0 * k as f64 + 1.5)).abs() < 1e-10);
        }
        for t in [0.0, 0.3, 5.0] {
            assert_eq!(m.edmc(t).unwrap(), 1.5 * 1.7);
        }
    }

    #[test]
    fn first_quartic_element() {
        let a = assemble_hamiltonian(3, 1.0, 1.0).unwrap();
        assert!((a.get(0, 0) - 5.25).abs() < 1e-13);
        // ⟨x⁴⟩ in φ_1 scales as ω^{-2}.
        let a = assemble_hamiltonian(3, 2.0, 1.0).unwrap();
        assert!((a.get(0, 0) - (3.0 + 15.0 / 16.0)).abs() < 1e-13);
    }

    #[test]
    fn quartic_elements_match_a_finer_rule() {
        let n = 12;
        let a = assemble_hamiltonian(n, 1.3, 0.7).unwrap();
        let q = gauss_hermite(150).unwrap();
        let s = 1.3f64.sqrt();
        for i in 0..n {
            for j in 0..n {
                assert_eq!(a.get(i, j), a.get(j, i));
                // Integrate in x directly, with φ in x and x = y/√ω.
                let quartic: f64 = q
                    .nodes()
                    .iter()
                    .zip(q.scaled_weights())
                    .map(|(&y, &w)| {
                        let x = y / s;
                        w / s * x.powi(4) * hermite_function(2 * i + 1, 1.3, x) * hermite_function(2 * j + 1, 1.3, x)
                    })
                    .sum();
                let expected = 0.7 * quartic + if i == j { 1.3 * (2.0 * i as f64 + 1.5) } else { 0.0 };
                assert!(
                    (a.get(i, j) - expected).abs() < 1e-10 * expected.abs().max(1.0),
                    "({i},{j})"
                );
            }
        }
    }

    #[test]
    fn spectrum_structure() {
        for theta in [0.5, 2.0] {
            let m = SpectralModel::new(40, 1.0, theta).unwrap();
            assert!(m.eigenvalues().windows(2).all(|w| w[1] - w[0] > 1e-10));
            let norm: f64 = m.overlaps().iter().map(|u| u * u).sum();
            assert!((norm - 1.0).abs() < 1e-10);
            assert_eq!(m.projections(), m.overlaps());
            assert!(m.overlaps().iter().all(|&u| u >= 0.0));
        }
    }

    #[test]
    fn ground_energy_is_monotone_in_theta() {
        let e = |theta| reference_ground_energy(40, 1.0, theta).unwrap();
        assert!((e(0.0) - 1.5).abs() < 1e-12);
        assert!(e(2.0) > e(0.5) && e(0.5) > e(0.0));
    }

    #[test]
    fn ground_energy_is_non_increasing_in_basis_size() {
        for theta in [0.5, 2.0] {
            let mut previous = f64::INFINITY;
            for n in 1..=70 {
                let e = reference_ground_energy(n, 1.0, theta).unwrap();
                // Rounding noise of the dense solver once converged.
                assert!(e <= previous + 1e-10, "θ={theta} n={n}: {e} > {previous}");
                previous = e;
            }
        }
    }

    #[test]
    fn basis_convergence_is_monotone() {
        // Convergence in n comes in steps: where an added function barely
        // lowers E_0 the gap to n + 10 can grow by a few parts in 10⁴
        // (n = 17 at θ = 0.5, n = 37 at θ = 2). Past 1e-12 only rounding remains.
        const PLATEAU: f64 = 1e-3;
        const FLOOR: f64 = 1e-12;
        for theta in [0.5, 2.0] {
            let e: Vec<f64> = (10..=70)
                .map(|n| reference_ground_energy(n, 1.0, theta).unwrap())
                .collect();
            let diffs: Vec<f64> = (0..=50).map(|i| (e[i] - e[i + 10]).abs()).collect();
            for (i, w) in diffs.windows(2).enumerate() {
                assert!(
                    w[1] <= w[0] * (1.0 + PLATEAU) || w[1] < FLOOR,
                    "θ={theta} n={}: {} > {}",
                    i + 11,
                    w[1],
                    w[0]
                );
            }
            assert!(diffs[50] < FLOOR);
            // Over ten steps the decrease is strict.
            for i in 0..40 {
                assert!(
                    diffs[i + 10] < diffs[i] || diffs[i + 10] < FLOOR,
                    "θ={theta} n={}",
                    i + 10
                );
            }
        }
    }

    #[test]
    fn initial_energy_is_the_rayleigh_quotient() {
        for (omega, theta) in [(1.0, 2.0), (0.7, 0.5), (2.0, 3.0)] {
            let m = SpectralModel::new(30, omega, theta).unwrap();
            let q = gauss_hermite(120).unwrap();
            let s = libm::sqrt(omega);
            // ⟨ψ_I, Hψ_I⟩ = 3ω/2 + θ⟨x⁴⟩ with ⟨x⁴⟩ by quadrature in y = √ω x.
            let x4: f64 = q
                .nodes()
                .iter()
                .zip(q.scaled_weights())
                .map(|(&y, &w)| {
                    let psi1 = hermite_values(y, 2)[1];
                    w * (y / s).powi(4) * psi1 * psi1
                })
                .sum();
            let expected = 1.5 * omega + theta * x4;
            assert!((m.edmc(0.0).unwrap() - expected).abs() < 1e-10 * expected);
        }
    }

    #[test]
    fn long_times_reach_the_ground_energy() {
        let m = SpectralModel::new(40, 1.0, 2.0).unwrap();
        let e = m.edmc(1e3).unwrap();
        assert!((e - m.ground_energy()).abs() < 1e-12);
        assert!(m.edmc_excess(1e3).unwrap() >= 0.0);
    }

    #[test]
    fn decay_rate_is_the_gap() {
        let m = SpectralModel::new(40, 1.0, 2.0).unwrap();
        let gap = m.gap().unwrap();
        let ts: Vec<f64> = (0..=40).map(|i| 2.0 + 0.1 * i as f64).collect();
        let ys: Vec<f64> = ts.iter().map(|&t| m.edmc_excess(t).unwrap().ln()).collect();
        let tm = ts.iter().sum::<f64>() / ts.len() as f64;
        let ym = ys.iter().sum::<f64>() / ys.len() as f64;
        let slope = ts.iter().zip(&ys).map(|(t, y)| (t - tm) * (y - ym)).sum::<f64>()
            / ts.iter().map(|t| (t - tm).powi(2)).sum::<f64>();
        assert!((slope + gap).abs() < 0.05 * gap, "slope {slope}, gap {gap}");
    }

    #[test]
    fn forty_functions_are_enough() {
        let a = reference_edmc(40, 1.0, 2.0, 5.0).unwrap();
        let b = reference_edmc(60, 1.0, 2.0, 5.0).unwrap();
        assert!((a - b).abs() < 1e-8, "{a} vs {b}");
    }

    #[test]
    fn rejects_bad_input() {
        assert!(SpectralModel::new(0, 1.0, 1.0).is_err());
        assert!(SpectralModel::new(MAX_BASIS + 1, 1.0, 1.0).is_err());
        assert!(SpectralModel::new(MAX_BASIS, 1.0, 1.0).is_ok());
        assert!(SpectralModel::new(5, 0.0, 1.0).is_err());
        assert!(SpectralModel::new(5, 1.0, -1.0).is_err());
        assert!(SpectralModel::new(5, 1.0, f64::NAN).is_err());
        let m = SpectralModel::new(5, 1.0, 1.0).unwrap();
        assert!(m.edmc(-1.0).is_err());
        assert!(m.edmc(f64::INFINITY).is_err());
        assert_eq!(SpectralModel::new(1, 1.0, 1.0).unwrap().gap(), None);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn edmc_decreases_towards_ground_energy(
            omega in 0.3f64..3.0,
            theta in 0.0f64..4.0,
            t in 0.0f64..5.0,
        ) {
            let m = SpectralModel::new(25, omega, theta).unwrap();
            let now = m.edmc(t).unwrap();
            let later = m.edmc(t + 0.1).unwrap();
            prop_assert!(later <= now + 1e-12 * now);
            prop_assert!(later >= m.ground_energy() - 1e-12 * now);
        }
    }
}
