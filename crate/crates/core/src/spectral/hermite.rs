//! Normalized Hermite functions.
//!
//! `ψ_k(y) = H_k(y) e^{-y²/2} / sqrt(2^k k! √π)` are evaluated through the
//! recurrence
//! `ψ_{k+1} = sqrt(2/(k+1)) y ψ_k - sqrt(k/(k+1)) ψ_{k-1}`, which never forms
//! `H_k` or `2^k k!` separately.

use alloc::vec;
use alloc::vec::Vec;

/// Largest index accepted by [`hermite_function`].
pub const MAX_INDEX: usize = 200;

/// `π^{-1/4}`.
const PI_M_QUARTER: f64 = 0.751_125_544_464_942_5;

/// Fills `out[k] = ψ_k(y)` for `k < out.len()`.
pub fn fill_hermite(y: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    out[0] = PI_M_QUARTER * libm::exp(-0.5 * y * y);
    if out.len() > 1 {
        out[1] = core::f64::consts::SQRT_2 * y * out[0];
    }
    for k in 1..out.len().saturating_sub(1) {
        let kf = k as f64;
        out[k + 1] = libm::sqrt(2.0 / (kf + 1.0)) * y * out[k] - libm::sqrt(kf / (kf + 1.0)) * out[k - 1];
    }
}

/// `ψ_0(y), …, ψ_{count-1}(y)`.
pub fn hermite_values(y: f64, count: usize) -> Vec<f64> {
    let mut out = vec![0.0; count];
    fill_hermite(y, &mut out);
    out
}

/// The `k`-th eigenfunction of `-½∂² + ½ω²x²` on the line:
/// `φ_k(x) = ω^{1/4} ψ_k(√ω x)`.
///
/// Panics if `k > MAX_INDEX` or `omega ≤ 0`.
pub fn hermite_function(k: usize, omega: f64, x: f64) -> f64 {
    assert!(k <= MAX_INDEX, "index {k} exceeds {MAX_INDEX}");
    assert!(omega > 0.0, "omega must be positive");
    let y = libm::sqrt(omega) * x;
    libm::sqrt(libm::sqrt(omega)) * hermite_values(y, k + 1)[k]
}
