//! Dense symmetric eigendecomposition by cyclic Jacobi rotations.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Largest matrix accepted by [`eigendecompose`].
pub const MAX_DIM: usize = 200;

const MAX_SWEEPS: usize = 100;

/// Square matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    dim: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(dim: usize) -> Self {
        Matrix {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Matrix::from_fn(dim, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Matrix::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m.data[i * dim + j] = f(i, j);
            }
        }
        m
    }

    /// Panics unless every row has `rows.len()` entries.
    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let dim = rows.len();
        assert!(rows.iter().all(|r| r.len() == dim), "matrix must be square");
        Matrix::from_fn(dim, |i, j| rows[i][j])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.dim + j] = value;
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, j)).collect()
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.dim);
        self.data
            .chunks_exact(self.dim.max(1))
            .take(self.dim)
            .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.dim).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }

    pub fn frobenius_norm(&self) -> f64 {
        libm::sqrt(self.data.iter().map(|a| a * a).sum())
    }

    fn off_diagonal_norm(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                if i != j {
                    s += self.get(i, j) * self.get(i, j);
                }
            }
        }
        libm::sqrt(s)
    }
}

/// Eigenvalues in ascending order; column `k` of `vectors` belongs to `values[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Eigen {
    pub values: Vec<f64>,
    pub vectors: Matrix,
}

/// Eigenpairs of a symmetric matrix of dimension at most [`MAX_DIM`].
pub fn eigendecompose(a: &Matrix) -> Result<Eigen> {
    let n = a.dim();
    if n == 0 || n > MAX_DIM {
        return Err(Error::InvalidParameter {
            name: "matrix",
            reason: "dimension must be between 1 and 200",
        });
    }
    if !a.data.iter().all(|x| x.is_finite()) {
        return Err(Error::NonFinite {
            name: "matrix",
            value: a.data.iter().copied().find(|x| !x.is_finite()).unwrap_or(f64::NAN),
        });
    }
    if !a.is_symmetric() {
        return Err(Error::InvalidParameter {
            name: "matrix",
            reason: "must be symmetric",
        });
    }
    let mut m = a.clone();
    let mut v = Matrix::identity(n);
    let tolerance = 1e-15 * m.frobenius_norm();
    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        if m.off_diagonal_norm() <= tolerance {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                rotate(&mut m, &mut v, p, q);
            }
        }
    }
    if !converged && m.off_diagonal_norm() > tolerance {
        return Err(Error::NoConvergence { sweeps: MAX_SWEEPS });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m.get(i, i).total_cmp(&m.get(j, j)));
    let values = order.iter().map(|&i| m.get(i, i)).collect();
    let vectors = Matrix::from_fn(n, |i, k| v.get(i, order[k]));
    Ok(Eigen { values, vectors })
}

/// Zeroes `m[p][q]` by the rotation `m ← JᵀmJ`, accumulating `v ← vJ`.
fn rotate(m: &mut Matrix, v: &mut Matrix, p: usize, q: usize) {
    let apq = m.get(p, q);
    let (app, aqq) = (m.get(p, p), m.get(q, q));
    if apq == 0.0 {
        return;
    }
    // Below this the rotation no longer changes either diagonal entry.
    if libm::fabs(apq) < 1e-18 * (libm::fabs(app) + libm::fabs(aqq)) {
        m.set(p, q, 0.0);
        m.set(q, p, 0.0);
        return;
    }
    let theta = (aqq - app) / (2.0 * apq);
    let t = if theta.is_finite() {
        let t = 1.0 / (libm::fabs(theta) + libm::sqrt(theta * theta + 1.0));
        if theta < 0.0 {
            -t
        } else {
            t
        }
    } else {
        0.5 / theta
    };
    let c = 1.0 / libm::sqrt(t * t + 1.0);
    let s = t * c;
    let n = m.dim();
    for k in 0..n {
        let (mkp, mkq) = (m.get(k, p), m.get(k, q));
        m.set(k, p, c * mkp - s * mkq);
        m.set(k, q, s * mkp + c * mkq);
    }
    for k in 0..n {
        let (mpk, mqk) = (m.get(p, k), m.get(q, k));
        m.set(p, k, c * mpk - s * mqk);
        m.set(q, k, s * mpk + c * mqk);
    }
    m.set(p, p, app - t * apq);
    m.set(q, q, aqq + t * apq);
    m.set(p, q, 0.0);
    m.set(q, p, 0.0);
    for k in 0..n {
        let (vkp, vkq) = (v.get(k, p), v.get(k, q));
        v.set(k, p, c * vkp - s * vkq);
        v.set(k, q, s * vkp + c * vkq);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn check_decomposition(a: &Matrix, e: &Eigen) {
        let n = a.dim();
        let norm = a.frobenius_norm().max(1.0);
        for k in 0..n {
            let vk = e.vectors.column(k);
            let av = a.mul_vec(&vk);
            let residual: f64 = av
                .iter()
                .zip(&vk)
                .map(|(x, y)| (x - e.values[k] * y).powi(2))
                .sum::<f64>()
                .sqrt();
            assert!(residual < 1e-9 * norm, "residual {residual} for k={k}");
            for j in 0..=k {
                let dot: f64 = vk.iter().zip(e.vectors.column(j)).map(|(x, y)| x * y).sum();
                let expected = if j == k { 1.0 } else { 0.0 };
                assert!((dot - expected).abs() < 1e-10, "({j},{k}) {dot}");
            }
        }
        assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn two_by_two() {
        let a = Matrix::from_rows(&[&[2.0, 1.0], &[1.0, 2.0]]);
        let e = eigendecompose(&a).unwrap();
        assert!((e.values[0] - 1.0).abs() < 1e-14);
        assert!((e.values[1] - 3.0).abs() < 1e-14);
        check_decomposition(&a, &e);
    }

    #[test]
    fn diagonal_input_sorts_and_permutes() {
        let d = [3.0, -1.0, 2.0, 0.5];
        let a = Matrix::from_fn(4, |i, j| if i == j { d[i] } else { 0.0 });
        let e = eigendecompose(&a).unwrap();
        assert_eq!(e.values, vec![-1.0, 0.5, 2.0, 3.0]);
        let perm = [1, 3, 2, 0];
        for (k, &i) in perm.iter().enumerate() {
            let col = e.vectors.column(k);
            for (r, &x) in col.iter().enumerate() {
                assert_eq!(x, if r == i { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(eigendecompose(&Matrix::zeros(0)).is_err());
        assert!(eigendecompose(&Matrix::zeros(201)).is_err());
        assert!(eigendecompose(&Matrix::from_rows(&[&[1.0, 2.0], &[0.0, 1.0]])).is_err());
        assert!(eigendecompose(&Matrix::from_rows(&[&[f64::NAN]])).is_err());
    }

    #[test]
    fn tridiagonal_with_known_spectrum() {
        // The path-graph Laplacian-like matrix 2 on the diagonal, -1 off it
        // has eigenvalues 2 - 2cos(kπ/(n+1)).
        let n = 50;
        let a = Matrix::from_fn(n, |i, j| match i.abs_diff(j) {
            0 => 2.0,
            1 => -1.0,
            _ => 0.0,
        });
        let e = eigendecompose(&a).unwrap();
        for (k, &l) in e.values.iter().enumerate() {
            let exact = 2.0 - 2.0 * (((k + 1) as f64) * core::f64::consts::PI / (n + 1) as f64).cos();
            assert!((l - exact).abs() < 1e-12, "{k}: {l} vs {exact}");
        }
        check_decomposition(&a, &e);
    }

    #[test]
    fn largest_size_converges() {
        let n = MAX_DIM;
        let a = Matrix::from_fn(n, |i, j| {
            let (i, j) = (i.min(j) as f64, i.max(j) as f64);
            1.0 / (1.0 + i + j) + if i == j { i } else { 0.0 }
        });
        let e = eigendecompose(&a).unwrap();
        check_decomposition(&a, &e);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn random_symmetric_matrices(
            n in 1usize..12,
            entries in proptest::collection::vec(-10.0f64..10.0, 144),
        ) {
            let a = Matrix::from_fn(n, |i, j| entries[i.min(j) * 12 + i.max(j)]);
            let e = eigendecompose(&a).unwrap();
            check_decomposition(&a, &e);
            let trace: f64 = (0..n).map(|i| a.get(i, i)).sum();
            let sum: f64 = e.values.iter().sum();
            prop_assert!((trace - sum).abs() < 1e-10 * (1.0 + trace.abs()));
        }
    }
}
