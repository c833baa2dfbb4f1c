//! Selection step: maps the final walker positions and their normalized
//! weights to `N` new starting positions.
//!
//! Every scheme returns the parent of each new slot. All of them replicate
//! walker `j` `Nρ_j` times in mean (the correlated multinomial scheme does so
//! slot by slot through its keep/redraw mixture).

use alloc::vec;
use alloc::vec::Vec;

use rand::RngCore;

use crate::error::{Error, Result};
use crate::model::{KeepFactor, ModelParams, ResamplerKind};
use crate::rng::{half_open_uniform, open_closed_uniform};
use crate::sampler::WalkerBlock;

/// Unnormalized log-weights `ln g(ξ^i)` with their normalized counterparts.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    log_g: Vec<f64>,
    rho: Vec<f64>,
    max_log_g: f64,
    log_sum: f64,
}

impl WeightVector {
    /// Wraps already normalized weights (nonnegative, summing to one within
    /// `1e-12`); the log-weights are taken as `ln ρ`.
    pub fn from_probabilities(rho: Vec<f64>) -> Result<Self> {
        if rho.is_empty() {
            return Err(Error::InvalidParameter {
                name: "rho",
                reason: "needs at least one walker",
            });
        }
        if rho.iter().any(|r| !r.is_finite() || *r < 0.0) {
            return Err(Error::InvalidParameter {
                name: "rho",
                reason: "weights must be finite and nonnegative",
            });
        }
        if (rho.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter {
                name: "rho",
                reason: "weights must sum to one",
            });
        }
        let log_g: Vec<f64> = rho.iter().map(|&r| libm::log(r)).collect();
        let max_log_g = log_g.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok(WeightVector {
            log_g,
            rho,
            max_log_g,
            log_sum: 0.0,
        })
    }

    pub fn log_g(&self) -> &[f64] {
        &self.log_g
    }

    /// Normalized weights `ρ`, summing to one.
    pub fn rho(&self) -> &[f64] {
        &self.rho
    }

    pub fn len(&self) -> usize {
        self.rho.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rho.is_empty()
    }

    pub fn max_log_g(&self) -> f64 {
        self.max_log_g
    }

    /// `ln Σ_i g_i`.
    pub fn log_sum(&self) -> f64 {
        self.log_sum
    }

    /// Effective sample size `1 / Σ ρ_i²`, between 1 and `N`.
    pub fn effective_sample_size(&self) -> f64 {
        1.0 / self.rho.iter().map(|r| r * r).sum::<f64>()
    }

    /// `Σ_i ρ_i f_i`.
    pub fn weighted_mean(&self, values: impl IntoIterator<Item = f64>) -> f64 {
        self.rho.iter().zip(values).map(|(r, v)| r * v).sum()
    }

    /// Cumulative sums of `ρ`, the last one clamped to exactly 1.
    fn cumulative(&self) -> Vec<f64> {
        cumulative_clamped(self.rho.iter().copied())
    }
}

fn cumulative_clamped(weights: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut acc = 0.0;
    let mut c: Vec<f64> = weights
        .map(|w| {
            acc += w;
            acc
        })
        .collect();
    if let Some(last) = c.last_mut() {
        *last = 1.0;
    }
    c
}

/// Parents of the new slots and the matching offspring counts.
///
/// Indices are zero-based: new slot `i` starts from the final position of
/// walker `parents[i]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SelectionOutcome {
    parents: Vec<usize>,
    offspring_counts: Vec<usize>,
}

impl SelectionOutcome {
    pub fn from_parents(parents: Vec<usize>) -> Self {
        let mut offspring_counts = vec![0; parents.len()];
        for &j in &parents {
            offspring_counts[j] += 1;
        }
        SelectionOutcome {
            parents,
            offspring_counts,
        }
    }

    /// Parents laid out in index order, walker `j` repeated `counts[j]` times.
    pub fn from_counts(counts: Vec<usize>) -> Self {
        let parents = counts
            .iter()
            .enumerate()
            .flat_map(|(j, &c)| core::iter::repeat_n(j, c))
            .collect();
        SelectionOutcome {
            parents,
            offspring_counts: counts,
        }
    }

    pub fn identity(n: usize) -> Self {
        SelectionOutcome {
            parents: (0..n).collect(),
            offspring_counts: vec![1; n],
        }
    }

    pub fn parents(&self) -> &[usize] {
        &self.parents
    }

    pub fn offspring_counts(&self) -> &[usize] {
        &self.offspring_counts
    }
}

/// `ln g(y) = -θδt Σ_k y_k⁴`.
pub fn block_log_weight(block: &WalkerBlock, p: &ModelParams) -> f64 {
    -p.theta() * p.dt() * block.sum_fourth_powers()
}

/// Max-shifted normalization of log-weights.
///
/// Fails with [`Error::DivergedWeights`] when every entry is `-∞` and with
/// [`Error::NonFinite`] on any other non-finite entry.
pub fn normalize(log_g: Vec<f64>) -> Result<WeightVector> {
    if log_g.is_empty() {
        return Err(Error::InvalidParameter {
            name: "log_g",
            reason: "needs at least one walker",
        });
    }
    let max_log_g = log_g.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if log_g.iter().all(|&l| l == f64::NEG_INFINITY) {
        return Err(Error::DivergedWeights {
            max_log_weight: max_log_g,
        });
    }
    if let Some(&bad) = log_g.iter().find(|l| !l.is_finite()) {
        return Err(Error::NonFinite {
            name: "log_g",
            value: bad,
        });
    }
    let mut rho: Vec<f64> = log_g.iter().map(|&l| libm::exp(l - max_log_g)).collect();
    let total: f64 = rho.iter().sum();
    for r in &mut rho {
        *r /= total;
    }
    Ok(WeightVector {
        log_sum: max_log_g + libm::log(total),
        log_g,
        rho,
        max_log_g,
    })
}

/// Index `j` of the first cumulative value with `u ≤ c_j`; since `u > 0`
/// this is the cell `c_{j-1} < u ≤ c_j`, which never has zero width.
#[inline]
fn invert(cumulative: &[f64], u: f64) -> usize {
    cumulative.partition_point(|&c| c < u).min(cumulative.len() - 1)
}

/// Multinomial resampling (keep factor `ε = 0`): parents i.i.d. from `ρ`.
pub fn select_multinomial<R: RngCore + ?Sized>(w: &WeightVector, rng: &mut R) -> SelectionOutcome {
    let c = w.cumulative();
    let parents = (0..w.len()).map(|_| invert(&c, open_closed_uniform(rng))).collect();
    SelectionOutcome::from_parents(parents)
}

/// Correlated multinomial resampling: slot `i` keeps walker `i` with
/// probability `ε g_i`, otherwise redraws its parent from `ρ`.
pub fn select_correlated_multinomial<R: RngCore + ?Sized>(
    w: &WeightVector,
    keep: KeepFactor,
    rng: &mut R,
) -> Result<SelectionOutcome> {
    let log_eps = match keep {
        KeepFactor::InverseMax => -w.max_log_g,
        KeepFactor::Unit => {
            if w.max_log_g > 0.0 {
                return Err(Error::InvalidParameter {
                    name: "keep_factor",
                    reason: "unit keep factor needs g <= 1",
                });
            }
            0.0
        }
    };
    let c = w.cumulative();
    let parents = w
        .log_g
        .iter()
        .enumerate()
        .map(|(i, &l)| {
            let keep_probability = libm::exp(l + log_eps);
            if half_open_uniform(rng) < keep_probability {
                i
            } else {
                invert(&c, open_closed_uniform(rng))
            }
        })
        .collect();
    Ok(SelectionOutcome::from_parents(parents))
}

/// Deterministic part of the remainder schemes: `⌊Nρ_j⌋` copies of each `j`
/// and the fractional parts `{Nρ_j}`.
fn integer_parts(w: &WeightVector) -> (Vec<usize>, Vec<f64>, usize) {
    let n = w.len() as f64;
    let mut counts = Vec::with_capacity(w.len());
    let mut fractions = Vec::with_capacity(w.len());
    for &r in &w.rho {
        let scaled = n * r;
        let whole = libm::floor(scaled);
        counts.push(whole as usize);
        fractions.push(scaled - whole);
    }
    let copied: usize = counts.iter().sum();
    (counts, fractions, w.len() - copied)
}

/// Residual (stochastic remainder) resampling.
pub fn select_residual<R: RngCore + ?Sized>(w: &WeightVector, rng: &mut R) -> SelectionOutcome {
    let (mut counts, fractions, remaining) = integer_parts(w);
    if remaining > 0 {
        let total: f64 = fractions.iter().sum();
        let c = cumulative_clamped(fractions.iter().map(|f| f / total));
        for _ in 0..remaining {
            counts[invert(&c, open_closed_uniform(rng))] += 1;
        }
    }
    SelectionOutcome::from_counts(counts)
}

/// Stratified inversion of `m` points `(i - U_i)/m`, `i = 1..m`, into the
/// cumulative weights `c`. `uniform` yields `U_i ∈ [0, 1)`.
fn stratified_parents(c: &[f64], m: usize, mut uniform: impl FnMut() -> f64) -> Vec<usize> {
    let mut parents = Vec::with_capacity(m);
    let mut j = 0;
    for i in 1..=m {
        let u = (i as f64 - uniform()) / m as f64;
        while j + 1 < c.len() && c[j] < u {
            j += 1;
        }
        parents.push(j);
    }
    parents
}

/// Stratified resampling: one independent uniform per stratum `((i-1)/N, i/N]`.
pub fn select_stratified<R: RngCore + ?Sized>(w: &WeightVector, rng: &mut R) -> SelectionOutcome {
    let c = w.cumulative();
    SelectionOutcome::from_parents(stratified_parents(&c, w.len(), || half_open_uniform(rng)))
}

/// Offspring counts of systematic resampling for a given common uniform:
/// `⌊N c_j + U⌋ - ⌊N c_{j-1} + U⌋`.
pub fn systematic_counts(w: &WeightVector, u: f64) -> Vec<usize> {
    let n = w.len() as f64;
    let mut prev = libm::floor(u);
    w.cumulative()
        .into_iter()
        .map(|c| {
            let next = libm::floor(n * c + u);
            let count = (next - prev) as usize;
            prev = next;
            count
        })
        .collect()
}

/// Systematic resampling: stratified resampling with a single common uniform.
pub fn select_systematic<R: RngCore + ?Sized>(w: &WeightVector, rng: &mut R) -> SelectionOutcome {
    SelectionOutcome::from_counts(systematic_counts(w, half_open_uniform(rng)))
}

/// Stratified remainder resampling: `⌊Nρ_j⌋` deterministic copies, then the
/// `N^R` remaining slots by stratified resampling over `{Nρ_j}/N^R`.
pub fn select_stratified_remainder<R: RngCore + ?Sized>(w: &WeightVector, rng: &mut R) -> SelectionOutcome {
    let (mut counts, fractions, remaining) = integer_parts(w);
    if remaining > 0 {
        let total: f64 = fractions.iter().sum();
        let c = cumulative_clamped(fractions.iter().map(|f| f / total));
        for j in stratified_parents(&c, remaining, || half_open_uniform(rng)) {
            counts[j] += 1;
        }
    }
    SelectionOutcome::from_counts(counts)
}

/// Applies the selection scheme `kind`; [`ResamplerKind::None`] keeps every
/// walker in place.
pub fn select<R: RngCore + ?Sized>(
    kind: ResamplerKind,
    keep: KeepFactor,
    w: &WeightVector,
    rng: &mut R,
) -> Result<SelectionOutcome> {
    Ok(match kind {
        ResamplerKind::Multinomial => select_multinomial(w, rng),
        ResamplerKind::CorrelatedMultinomial => select_correlated_multinomial(w, keep, rng)?,
        ResamplerKind::Residual => select_residual(w, rng),
        ResamplerKind::Stratified => select_stratified(w, rng),
        ResamplerKind::Systematic => select_systematic(w, rng),
        ResamplerKind::StratifiedRemainder => select_stratified_remainder(w, rng),
        ResamplerKind::None => SelectionOutcome::identity(w.len()),
    })
}

#[cfg(test)]
#[allow(clippy::needless_range_loop)]
mod tests {
    use super::*;
    use crate::rng::{Purpose, RngStream, StreamId};
    use proptest::prelude::*;

    const SELECTING: [ResamplerKind; 6] = [
        ResamplerKind::Multinomial,
        ResamplerKind::CorrelatedMultinomial,
        ResamplerKind::Residual,
        ResamplerKind::Stratified,
        ResamplerKind::Systematic,
        ResamplerKind::StratifiedRemainder,
    ];

    fn stream(seed: u64) -> RngStream {
        RngStream::new(seed, StreamId::new(0, 0, Purpose::Auxiliary))
    }

    fn weights(rho: &[f64]) -> WeightVector {
        WeightVector::from_probabilities(rho.to_vec()).unwrap()
    }

    #[test]
    fn block_log_weight_examples() {
        let p0 = ModelParams::builder().theta(0.0).build().unwrap();
        let b = WalkerBlock::new(1.0, vec![3.0, 0.1, 2.0]).unwrap();
        assert_eq!(block_log_weight(&b, &p0), 0.0);

        let p = ModelParams::builder()
            .theta(2.0)
            .final_time(0.005)
            .blocks(1)
            .steps_per_block(1)
            .build()
            .unwrap();
        let one = WalkerBlock::new(1.0, vec![1.0]).unwrap();
        assert!((block_log_weight(&one, &p) + 0.01).abs() < 1e-15);
        let two = WalkerBlock::new(1.0, vec![1.0, 0.5]).unwrap();
        assert!(block_log_weight(&two, &p) < block_log_weight(&one, &p));
    }

    #[test]
    fn normalize_examples() {
        let w = normalize(vec![-3.0; 5]).unwrap();
        assert!(w.rho().iter().all(|&r| (r - 0.2).abs() < 1e-15));
        assert!((w.effective_sample_size() - 5.0).abs() < 1e-12);

        let w = normalize(vec![0.0, -1e6]).unwrap();
        assert_eq!(w.rho(), &[1.0, 0.0]);

        assert!(matches!(
            normalize(vec![f64::NEG_INFINITY; 3]),
            Err(Error::DivergedWeights { .. })
        ));
        assert!(matches!(normalize(vec![0.0, f64::NAN]), Err(Error::NonFinite { .. })));
        assert!(normalize(vec![]).is_err());
    }

    #[test]
    fn normalize_survives_huge_exponents() {
        let w = normalize(vec![-1e300, -1e300 - 1e290, -5e299]).unwrap();
        assert!((w.rho().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(w.rho()[2], 1.0);
    }

    proptest! {
        #[test]
        fn normalize_is_shift_invariant(
            log_g in proptest::collection::vec(-50.0f64..0.0, 1..40),
            shift in -1e3f64..1e3,
        ) {
            let a = normalize(log_g.clone()).unwrap();
            let b = normalize(log_g.iter().map(|l| l + shift).collect()).unwrap();
            prop_assert!((a.rho().iter().sum::<f64>() - 1.0).abs() < 1e-12);
            for (x, y) in a.rho().iter().zip(b.rho()) {
                prop_assert!(*x >= 0.0);
                prop_assert!((x - y).abs() < 1e-12);
            }
        }

        #[test]
        fn every_scheme_conserves_population(
            log_g in proptest::collection::vec(-30.0f64..0.0, 1..60),
            seed in any::<u64>(),
        ) {
            let w = normalize(log_g).unwrap();
            for kind in SELECTING {
                let out = select(kind, KeepFactor::InverseMax, &w, &mut stream(seed)).unwrap();
                prop_assert_eq!(out.parents().len(), w.len());
                prop_assert_eq!(out.offspring_counts().iter().sum::<usize>(), w.len());
                let recount = SelectionOutcome::from_parents(out.parents().to_vec());
                prop_assert_eq!(recount.offspring_counts(), out.offspring_counts());
                for (j, &c) in out.offspring_counts().iter().enumerate() {
                    if c > 0 {
                        prop_assert!(w.rho()[j] > 0.0);
                    }
                }
            }
        }

        #[test]
        fn stratified_counts_stay_near_expectation(
            log_g in proptest::collection::vec(-10.0f64..0.0, 1..60),
            seed in any::<u64>(),
        ) {
            let w = normalize(log_g).unwrap();
            let n = w.len() as f64;
            for kind in [ResamplerKind::Stratified, ResamplerKind::Systematic] {
                let out = select(kind, KeepFactor::InverseMax, &w, &mut stream(seed)).unwrap();
                for (j, &c) in out.offspring_counts().iter().enumerate() {
                    let e = n * w.rho()[j];
                    prop_assert!(c as f64 >= e.floor() - 1.0 && c as f64 <= e.ceil() + 1.0);
                }
            }
        }
    }

    #[test]
    fn degenerate_weights_select_single_parent() {
        let w = weights(&[0.0, 0.0, 1.0, 0.0]);
        for kind in SELECTING {
            for seed in 0..20 {
                let out = select(kind, KeepFactor::InverseMax, &w, &mut stream(seed)).unwrap();
                assert_eq!(out.parents(), &[2, 2, 2, 2], "{kind}");
            }
        }
        let w = weights(&[1.0, 0.0, 0.0]);
        let out = select_multinomial(&w, &mut stream(1));
        assert_eq!(out.parents(), &[0, 0, 0]);
    }

    #[test]
    fn uniform_weights_examples() {
        let w = normalize(vec![0.0; 6]).unwrap();
        for seed in 0..50 {
            let mut rng = stream(seed);
            assert_eq!(select_stratified(&w, &mut rng), SelectionOutcome::identity(6));
            assert_eq!(select_systematic(&w, &mut rng).offspring_counts(), &[1; 6]);
            assert_eq!(select_residual(&w, &mut rng).offspring_counts(), &[1; 6]);
            assert_eq!(select_stratified_remainder(&w, &mut rng).offspring_counts(), &[1; 6]);
            assert_eq!(
                select_correlated_multinomial(&w, KeepFactor::InverseMax, &mut rng).unwrap(),
                SelectionOutcome::identity(6)
            );
        }
        for u in [0.0, 0.3, 0.999_999] {
            assert_eq!(systematic_counts(&w, u), vec![1; 6]);
        }
    }

    #[test]
    fn systematic_floor_example() {
        let w = weights(&[0.5, 0.5, 0.0, 0.0]);
        assert_eq!(systematic_counts(&w, 0.3), vec![2, 2, 0, 0]);
    }

    #[test]
    fn systematic_equals_stratified_with_common_uniform() {
        let w = weights(&[0.05, 0.3, 0.01, 0.24, 0.4]);
        for k in 0..100 {
            let u = k as f64 / 100.0 + 0.0031;
            let strat = SelectionOutcome::from_parents(stratified_parents(&w.cumulative(), w.len(), || u));
            assert_eq!(strat.offspring_counts(), systematic_counts(&w, u).as_slice());
        }
    }

    #[test]
    fn remainder_schemes_copy_integer_parts() {
        let w = weights(&[0.5, 0.25, 0.125, 0.125]);
        let (counts, fractions, remaining) = integer_parts(&w);
        assert_eq!(counts, vec![2, 1, 0, 0]);
        assert_eq!(remaining, 1);
        assert_eq!(fractions, vec![0.0, 0.0, 0.5, 0.5]);
        let mut seen = [0usize; 4];
        for seed in 0..400 {
            for out in [
                select_residual(&w, &mut stream(seed)),
                select_stratified_remainder(&w, &mut stream(seed)),
            ] {
                let c = out.offspring_counts();
                assert_eq!(&c[..2], &[2, 1]);
                assert_eq!(c[2] + c[3], 1);
                seen[2] += c[2];
                seen[3] += c[3];
            }
        }
        assert!(seen[2] > 300 && seen[3] > 300, "{seen:?}");
    }

    #[test]
    fn argmax_walker_keeps_its_position() {
        let w = weights(&[0.1, 0.6, 0.05, 0.25]);
        for seed in 0..200 {
            let out = select_correlated_multinomial(&w, KeepFactor::InverseMax, &mut stream(seed)).unwrap();
            assert_eq!(out.parents()[1], 1);
        }
    }

    #[test]
    fn unit_keep_factor_requires_subunit_weights() {
        let w = normalize(vec![0.5, -1.0]).unwrap();
        assert!(select_correlated_multinomial(&w, KeepFactor::Unit, &mut stream(0)).is_err());
        let w = normalize(vec![-0.5, -1.0]).unwrap();
        assert!(select_correlated_multinomial(&w, KeepFactor::Unit, &mut stream(0)).is_ok());
    }

    #[test]
    fn none_is_identity() {
        let w = weights(&[0.9, 0.1]);
        let out = select(ResamplerKind::None, KeepFactor::InverseMax, &w, &mut stream(0)).unwrap();
        assert_eq!(out, SelectionOutcome::identity(2));
    }

    /// Statistical checks against exact offspring moments, N = 8.
    mod statistics {
        use super::*;

        const DRAWS: usize = 100_000;

        fn random_rho(seed: u64) -> WeightVector {
            let mut rng = RngStream::new(seed, StreamId::new(1, 0, Purpose::Auxiliary));
            normalize((0..8).map(|_| -4.0 * half_open_uniform(&mut rng)).collect()).unwrap()
        }

        /// Per-index mean and variance of the offspring counts.
        fn offspring_moments(kind: ResamplerKind, w: &WeightVector, seed: u64) -> (Vec<f64>, Vec<f64>) {
            let n = w.len();
            let mut sum = vec![0.0; n];
            let mut sum2 = vec![0.0; n];
            let mut rng = stream(seed);
            for _ in 0..DRAWS {
                let out = select(kind, KeepFactor::InverseMax, w, &mut rng).unwrap();
                for (j, &c) in out.offspring_counts().iter().enumerate() {
                    sum[j] += c as f64;
                    sum2[j] += (c * c) as f64;
                }
            }
            let d = DRAWS as f64;
            let mean: Vec<f64> = sum.iter().map(|s| s / d).collect();
            let var = sum2
                .iter()
                .zip(&mean)
                .map(|(s2, m)| (s2 / d - m * m) * d / (d - 1.0))
                .collect();
            (mean, var)
        }

        #[test]
        fn unbiased_offspring() {
            for kind in [
                ResamplerKind::Multinomial,
                ResamplerKind::Residual,
                ResamplerKind::Stratified,
                ResamplerKind::Systematic,
                ResamplerKind::StratifiedRemainder,
            ] {
                let w = random_rho(3);
                let (mean, var) = offspring_moments(kind, &w, 99);
                for j in 0..8 {
                    let expected = 8.0 * w.rho()[j];
                    let se = (var[j] / DRAWS as f64).sqrt().max(1e-12);
                    assert!(
                        (mean[j] - expected).abs() <= 4.0 * se,
                        "{kind} j={j}: {} vs {expected}",
                        mean[j]
                    );
                }
            }
        }

        #[test]
        fn multinomial_marginals_are_binomial() {
            // Chi-square goodness of fit of offspring_count_0 against Binomial(8, ρ_0).
            let w = random_rho(7);
            let p0 = w.rho()[0];
            let mut hist = [0usize; 9];
            let mut rng = stream(5);
            for _ in 0..DRAWS {
                hist[select_multinomial(&w, &mut rng).offspring_counts()[0]] += 1;
            }
            let binom = |k: usize| {
                let mut c = 1.0;
                for i in 0..k {
                    c = c * (8 - i) as f64 / (i + 1) as f64;
                }
                c * p0.powi(k as i32) * (1.0 - p0).powi(8 - k as i32)
            };
            // Pool the tail so every expected cell count is at least 5.
            let mut chi2 = 0.0;
            let mut dof = 0;
            let (mut obs_tail, mut exp_tail) = (0.0, 0.0);
            for k in 0..=8 {
                let e = binom(k) * DRAWS as f64;
                if e >= 5.0 && exp_tail == 0.0 {
                    chi2 += (hist[k] as f64 - e).powi(2) / e;
                    dof += 1;
                } else {
                    obs_tail += hist[k] as f64;
                    exp_tail += e;
                }
            }
            if exp_tail > 0.0 {
                chi2 += (obs_tail - exp_tail).powi(2) / exp_tail;
                dof += 1;
            }
            dof -= 1;
            // 0.999 quantiles of chi-square for 1..=8 degrees of freedom.
            let critical = [10.83, 13.82, 16.27, 18.47, 20.52, 22.46, 24.32, 26.12][dof - 1];
            assert!(chi2 < critical, "chi2={chi2} dof={dof}");
        }

        #[test]
        fn correlated_multinomial_slot_marginals() {
            // P(parent_i = j) = ε g_j 1{i=j} + (1 - ε g_i) ρ_j, by direct enumeration.
            let w = normalize(vec![-0.2, -1.5, 0.0, -0.7]).unwrap();
            let max_g = w.log_g().iter().copied().fold(f64::MIN, f64::max).exp();
            let g: Vec<f64> = w.log_g().iter().map(|l| l.exp()).collect();
            let mut freq = [[0usize; 4]; 4];
            let mut rng = stream(13);
            for _ in 0..DRAWS {
                let out = select_correlated_multinomial(&w, KeepFactor::InverseMax, &mut rng).unwrap();
                for (i, &j) in out.parents().iter().enumerate() {
                    freq[i][j] += 1;
                }
            }
            for i in 0..4 {
                for j in 0..4 {
                    let keep = g[i] / max_g;
                    let p = if i == j { keep } else { 0.0 } + (1.0 - keep) * w.rho()[j];
                    let phat = freq[i][j] as f64 / DRAWS as f64;
                    let se = (p * (1.0 - p) / DRAWS as f64).sqrt().max(1e-12);
                    assert!((phat - p).abs() <= 4.0 * se, "i={i} j={j}: {phat} vs {p}");
                }
            }
        }

        #[test]
        fn correlated_schemes_reduce_offspring_variance() {
            let w = random_rho(21);
            let (_, var_sys) = offspring_moments(ResamplerKind::Systematic, &w, 1);
            let (_, var_srr) = offspring_moments(ResamplerKind::StratifiedRemainder, &w, 2);
            for j in 0..8 {
                let multinomial = 8.0 * w.rho()[j] * (1.0 - w.rho()[j]);
                assert!(var_sys[j] <= multinomial, "systematic j={j}");
                assert!(var_srr[j] <= multinomial, "stratified remainder j={j}");
            }
        }
    }
}
