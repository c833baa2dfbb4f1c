//! The mutation/selection loop over `ν` blocks and the energy estimators.
//!
//! One run draws `N` walkers from the invariant law, then for each block
//! `n = 1..ν` propagates every walker over `κ` fine steps (mutation), weighs
//! block `ξ^i_n` by `g(ξ^i_n) = exp(-θδt Σ_k y_k⁴)` and resamples the final
//! positions (selection). Three estimators of the DMC energy at `T` are
//! reported:
//!
//! * the weighted ratio `3ω/2 + θ Σ_i g_i y_{i,κ}⁴ / Σ_i g_i` over the last block,
//! * the plain mean `3ω/2 + (θ/N) Σ_i (X^i_{ν+1,0})⁴` after one more selection,
//! * the per-block trace `(1/N) Σ_i E_L(X^i_{n,0})` after every selection.
//!
//! Randomness is keyed per `(block, walker, purpose)`, so a run is a pure
//! function of its [`ModelParams`].

use alloc::vec;
use alloc::vec::Vec;

use rand::RngCore;

use crate::error::{Error, Result};
use crate::model::{ModelParams, ResamplerKind};
use crate::resampling::{normalize, select, SelectionOutcome, WeightVector};
use crate::rng::{Purpose, RngStream, StreamId};
use crate::sampler::{fourth, propagate_into, sample_invariant, ExactKernel, WalkerBlock};

/// Walker ensemble between two steps of the algorithm.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleState {
    block_index: usize,
    starts: Vec<f64>,
    blocks: Vec<WalkerBlock>,
    weights: Option<WeightVector>,
    /// Log-weights inherited from earlier blocks; nonzero only without selection.
    carried_log_weight: Vec<f64>,
}

impl EnsembleState {
    /// An ensemble whose block `block_index` has already been mutated into
    /// `blocks`. Weights are recomputed from the blocks.
    pub fn from_blocks(block_index: usize, blocks: Vec<WalkerBlock>, p: &ModelParams) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::InvalidParameter {
                name: "blocks",
                reason: "needs at least one walker",
            });
        }
        let starts = blocks.iter().map(WalkerBlock::start).collect();
        let carried_log_weight = vec![0.0; blocks.len()];
        let weights = Some(normalize(
            blocks
                .iter()
                .map(|b| crate::resampling::block_log_weight(b, p))
                .collect(),
        )?);
        Ok(EnsembleState {
            block_index,
            starts,
            blocks,
            weights,
            carried_log_weight,
        })
    }

    /// Index of the last mutated block; 0 before the first mutation.
    pub fn block_index(&self) -> usize {
        self.block_index
    }

    pub fn walkers(&self) -> usize {
        self.starts.len()
    }

    /// Starting positions `X^i_{n,0}` of the next block.
    pub fn starts(&self) -> &[f64] {
        &self.starts
    }

    /// The particles `ξ^i_n` of the last mutated block.
    pub fn blocks(&self) -> &[WalkerBlock] {
        &self.blocks
    }

    /// Weights of the last mutated block, including any carried weight.
    pub fn weights(&self) -> Option<&WeightVector> {
        self.weights.as_ref()
    }

    fn require_weights(&self) -> Result<&WeightVector> {
        self.weights.as_ref().ok_or(Error::InvalidParameter {
            name: "state",
            reason: "no block has been mutated yet",
        })
    }
}

/// Estimates of the DMC energy at the final time, with per-block diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    /// Weighted ratio over the last block.
    pub e_ratio: f64,
    /// Plain mean of `E_L` after one extra selection of the last block.
    pub e_mean_after_selection: f64,
    /// Estimate after each of the `ν` selections: `(1/N) Σ E_L` of the new
    /// starts. Without selection, the weighted ratio with accumulated weights.
    pub per_block_trace: Vec<f64>,
    /// `1/Σρ²` of each block's weights.
    pub effective_sample_sizes: Vec<f64>,
    pub params: ModelParams,
}

/// `N` i.i.d. starting positions from the invariant law.
pub fn init_ensemble(p: &ModelParams) -> EnsembleState {
    let n = p.walkers();
    let starts = (0..n)
        .map(|i| {
            let mut rng = RngStream::new(p.seed(), StreamId::new(0, i as u64, Purpose::Init));
            sample_invariant(&mut rng, p)
        })
        .collect();
    EnsembleState {
        block_index: 0,
        starts,
        blocks: vec![WalkerBlock::default(); n],
        weights: None,
        carried_log_weight: vec![0.0; n],
    }
}

/// Mutation of every walker over the next block, followed by weighting.
pub fn mutate_block(state: &mut EnsembleState, p: &ModelParams) -> Result<()> {
    if state.block_index >= p.blocks() {
        return Err(Error::InvalidParameter {
            name: "state",
            reason: "all blocks have already been simulated",
        });
    }
    let n = state.block_index + 1;
    let kernel = ExactKernel::new(p.omega(), p.dt());
    let scale = -p.theta() * p.dt();
    let mut log_g = Vec::with_capacity(state.walkers());
    for (i, (block, &start)) in state.blocks.iter_mut().zip(&state.starts).enumerate() {
        let mut rng = RngStream::new(p.seed(), StreamId::new(n as u64, i as u64, Purpose::Mutation));
        let sum4 = propagate_into(start, p, &kernel, &mut rng, block)?;
        log_g.push(state.carried_log_weight[i] + scale * sum4);
    }
    state.weights = Some(normalize(log_g)?);
    state.block_index = n;
    Ok(())
}

/// Selection closing the current block with the configured scheme; the new
/// starts replace the old ones. Without selection the walkers stay in place
/// and their log-weights are carried to the next block.
pub fn select_walkers(state: &mut EnsembleState, p: &ModelParams) -> Result<SelectionOutcome> {
    state.require_weights()?;
    let w = state.weights.as_ref().expect("checked above");
    let mut rng = selection_stream(p, state.block_index);
    let outcome = select(p.resampler(), p.keep_factor(), w, &mut rng)?;
    if p.resampler() == ResamplerKind::None {
        state.carried_log_weight.copy_from_slice(w.log_g());
    } else {
        state.carried_log_weight.iter_mut().for_each(|c| *c = 0.0);
    }
    state.starts = outcome.parents().iter().map(|&j| state.blocks[j].last()).collect();
    Ok(outcome)
}

fn selection_stream(p: &ModelParams, block: usize) -> RngStream {
    RngStream::new(p.seed(), StreamId::new(block as u64, 0, Purpose::Selection))
}

/// Mutation followed by selection.
pub fn step_block(state: &mut EnsembleState, p: &ModelParams) -> Result<SelectionOutcome> {
    mutate_block(state, p)?;
    select_walkers(state, p)
}

/// `3ω/2 + θ Σ_i ρ_i y_{i,κ}⁴` over the last mutated block.
pub fn estimator_ratio(state: &EnsembleState, p: &ModelParams) -> Result<f64> {
    let w = state.require_weights()?;
    let moment = w.weighted_mean(state.blocks.iter().map(|b| fourth(b.last())));
    Ok(p.ground_local_energy() + p.theta() * moment)
}

/// `3ω/2 + (θ/N) Σ_i (X^i_{ν+1,0})⁴`, the new starts coming from one more
/// selection of the last mutated block with `rng`.
///
/// Uses the configured scheme; without one (`ResamplerKind::None`) the extra
/// selection is multinomial over the accumulated weights.
pub fn estimator_mean_after_selection<R: RngCore + ?Sized>(
    state: &EnsembleState,
    p: &ModelParams,
    rng: &mut R,
) -> Result<f64> {
    let w = state.require_weights()?;
    let kind = match p.resampler() {
        ResamplerKind::None => ResamplerKind::Multinomial,
        kind => kind,
    };
    let outcome = select(kind, p.keep_factor(), w, rng)?;
    let moment = outcome
        .parents()
        .iter()
        .map(|&j| fourth(state.blocks[j].last()))
        .sum::<f64>()
        / state.walkers() as f64;
    Ok(p.ground_local_energy() + p.theta() * moment)
}

fn mean_local_energy(starts: &[f64], p: &ModelParams) -> f64 {
    let moment = starts.iter().map(|&x| fourth(x)).sum::<f64>() / starts.len() as f64;
    p.ground_local_energy() + p.theta() * moment
}

/// A full run: initialization, `ν` mutation/selection blocks, estimators.
pub fn run_dmc(p: &ModelParams) -> Result<RunResult> {
    run(p, None)
}

/// Like [`run_dmc`], also returning the weighted estimator at every fine time
/// `kδt`, `k = 0..=νκ`. Within a block the weight of walker `i` at step `k`
/// is its carried weight times `exp(-θδt Σ_{l≤k} y_l⁴)`.
pub fn run_dmc_with_path(p: &ModelParams) -> Result<(RunResult, Vec<f64>)> {
    let mut path = Vec::with_capacity(p.total_steps() + 1);
    let result = run(p, Some(&mut path))?;
    Ok((result, path))
}

fn run(p: &ModelParams, mut path: Option<&mut Vec<f64>>) -> Result<RunResult> {
    let nu = p.blocks();
    let mut state = init_ensemble(p);
    if let Some(path) = path.as_deref_mut() {
        path.push(mean_local_energy(&state.starts, p));
    }
    let mut per_block_trace = Vec::with_capacity(nu);
    let mut effective_sample_sizes = Vec::with_capacity(nu);
    let mut e_ratio = f64::NAN;
    let mut e_mean_after_selection = f64::NAN;
    for n in 1..=nu {
        let carried = state.carried_log_weight.clone();
        mutate_block(&mut state, p)?;
        if let Some(path) = path.as_deref_mut() {
            record_block_path(&state, &carried, p, path);
        }
        effective_sample_sizes.push(state.require_weights()?.effective_sample_size());
        if n < nu {
            select_walkers(&mut state, p)?;
            per_block_trace.push(match p.resampler() {
                ResamplerKind::None => estimator_ratio(&state, p)?,
                _ => mean_local_energy(&state.starts, p),
            });
        } else {
            e_ratio = estimator_ratio(&state, p)?;
            let mut rng = selection_stream(p, n);
            e_mean_after_selection = estimator_mean_after_selection(&state, p, &mut rng)?;
            per_block_trace.push(match p.resampler() {
                ResamplerKind::None => e_ratio,
                _ => e_mean_after_selection,
            });
        }
    }
    Ok(RunResult {
        e_ratio,
        e_mean_after_selection,
        per_block_trace,
        effective_sample_sizes,
        params: *p,
    })
}

fn record_block_path(state: &EnsembleState, carried: &[f64], p: &ModelParams, path: &mut Vec<f64>) {
    let scale = -p.theta() * p.dt();
    let mut partial = carried.to_vec();
    let mut shifted = vec![0.0; partial.len()];
    for k in 0..p.steps_per_block() {
        for (acc, b) in partial.iter_mut().zip(&state.blocks) {
            *acc += scale * fourth(b.positions()[k]);
        }
        let max = partial.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for (s, &l) in shifted.iter_mut().zip(&partial) {
            *s = libm::exp(l - max);
        }
        let total: f64 = shifted.iter().sum();
        let moment: f64 = shifted
            .iter()
            .zip(&state.blocks)
            .map(|(w, b)| w * fourth(b.positions()[k]))
            .sum::<f64>()
            / total;
        path.push(p.ground_local_energy() + p.theta() * moment);
    }
}

/// Checks `Σ a_i z_i^p e^{-c z_i⁴} / Σ a_i e^{-c z_i⁴} ≤ Σ a_i z_i^p / Σ a_i`
/// for nonnegative `a` (not all zero), nonnegative `z`, `power ≥ 0` and `c ≥ 0`:
/// exponential reweighting by `e^{-c z⁴}` can only lower positive moments.
///
/// Returns `None` when the inputs are outside that domain. A relative slack
/// of `1e-12` absorbs rounding.
pub fn reweighting_inequality_holds(a: &[f64], z: &[f64], power: f64, c: f64) -> Option<bool> {
    let valid = a.len() == z.len()
        && !a.is_empty()
        && a.iter().all(|&x| x >= 0.0 && x.is_finite())
        && z.iter().all(|&x| x >= 0.0 && x.is_finite())
        && a.iter().any(|&x| x > 0.0)
        && power >= 0.0
        && c >= 0.0;
    if !valid {
        return None;
    }
    // Shift the exponent by the smallest z⁴ so the reweighting cannot underflow.
    let min4 = z.iter().map(|&x| fourth(x)).fold(f64::INFINITY, f64::min);
    let mut num_w = 0.0;
    let mut den_w = 0.0;
    let mut num = 0.0;
    let mut den = 0.0;
    for (&ai, &zi) in a.iter().zip(z) {
        let zp = libm::pow(zi, power);
        let e = ai * libm::exp(-c * (fourth(zi) - min4));
        num_w += e * zp;
        den_w += e;
        num += ai * zp;
        den += ai;
    }
    let lhs = num_w / den_w;
    let rhs = num / den;
    Some(lhs <= rhs * (1.0 + 1e-12))
}
