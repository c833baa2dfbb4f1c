use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("non-finite value for `{name}`: {value}")]
    NonFinite { name: &'static str, value: f64 },

    #[error("walker position {0} is not strictly positive")]
    NonPositivePosition(f64),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: &'static str },

    #[error("time step {dt} violates the explicit scheme bound dt < {bound}")]
    UnstableTimeStep { dt: f64, bound: f64 },

    /// Every walker weight underflowed: the simulation has diverged.
    #[error("all walker weights vanished (max log-weight {max_log_weight})")]
    DivergedWeights { max_log_weight: f64 },

    #[error("quadrature order {0} outside the supported range 1..=200")]
    QuadratureOrder(usize),

    #[error("Jacobi eigensolver did not converge after {sweeps} sweeps")]
    NoConvergence { sweeps: usize },

    #[error("degenerate spectral denominator: ground state has no overlap with the trial function")]
    DegenerateDenominator,
}

impl Error {
    /// Errors that signal a numerically diverged computation rather than bad input.
    pub fn is_divergence(&self) -> bool {
        matches!(
            self,
            Error::DivergedWeights { .. } | Error::NoConvergence { .. } | Error::DegenerateDenominator
        )
    }
}

pub(crate) fn finite(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFinite { name, value })
    }
}
