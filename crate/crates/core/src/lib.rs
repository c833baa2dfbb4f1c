//! Fixed-population diffusion Monte Carlo for the one-dimensional quartic
//! oscillator `H = -½ d²/dx² + ω²x²/2 + θx⁴` restricted to odd functions.
//!
//! The crate is `no_std` (it needs `alloc`) and contains only the numerical
//! core: the closed-form model quantities, exact and explicit walker
//! propagation, the selection (resampling) schemes, the mutation/selection
//! engine with its energy estimators, and an independent Hermite–Galerkin
//! spectral reference. IO, configuration and the experiment drivers live in
//! the `dmc-lab` crate.
#![cfg_attr(not(any(test, feature = "std")), no_std)]

extern crate alloc;

pub mod engine;
pub mod error;
pub mod model;
pub mod resampling;
pub mod rng;
pub mod sampler;
pub mod spectral;

pub use engine::{run_dmc, EnsembleState, RunResult};
pub use error::{Error, Result};
pub use model::{KeepFactor, ModelParams, ModelParamsBuilder, ResamplerKind, Scheme};
pub use resampling::{SelectionOutcome, WeightVector};
pub use rng::{derive_seed, Purpose, RngStream, StreamId};
pub use sampler::WalkerBlock;
pub use spectral::{Quadrature, SpectralModel};
