//! Keyed random streams.
//!
//! Every stream is a ChaCha8 keystream whose 256-bit key is the tuple
//! `(root_seed, block, walker, purpose)`. Distinct tuples give distinct keys,
//! so the walkers of a block can be propagated in any order (or on any number
//! of threads) and still reproduce the same trajectories.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// What a stream is used for. Part of the key, so the same `(block, walker)`
/// pair can own several independent streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Purpose {
    /// Initial positions drawn from the invariant law.
    Init = 1,
    /// Walker propagation within a block.
    Mutation = 2,
    /// The selection step closing a block.
    Selection = 3,
    /// Seeds for repetitions of an experiment.
    Repetition = 4,
    /// Anything else (tests, diagnostics).
    Auxiliary = 5,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamId {
    pub block: u64,
    pub walker: u64,
    pub purpose: Purpose,
}

impl StreamId {
    pub fn new(block: u64, walker: u64, purpose: Purpose) -> Self {
        StreamId { block, walker, purpose }
    }
}

#[derive(Debug, Clone)]
pub struct RngStream {
    root_seed: u64,
    id: StreamId,
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(root_seed: u64, id: StreamId) -> Self {
        let mut key = [0u8; 32];
        key[0..8].copy_from_slice(&root_seed.to_le_bytes());
        key[8..16].copy_from_slice(&id.block.to_le_bytes());
        key[16..24].copy_from_slice(&id.walker.to_le_bytes());
        key[24..32].copy_from_slice(&(id.purpose as u64).to_le_bytes());
        RngStream {
            root_seed,
            id,
            inner: ChaCha8Rng::from_seed(key),
        }
    }

    pub fn root_seed(&self) -> u64 {
        self.root_seed
    }

    pub fn id(&self) -> StreamId {
        self.id
    }
}

impl RngCore for RngStream {
    #[inline]
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    #[inline]
    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    #[inline]
    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

/// Root seed of repetition `repetition` within group `group` (e.g. the index
/// of a sweep value) of an experiment seeded with `root_seed`.
pub fn derive_seed(root_seed: u64, group: u64, repetition: u64) -> u64 {
    RngStream::new(root_seed, StreamId::new(group, repetition, Purpose::Repetition)).next_u64()
}

/// Uniform draw on `(0, 1]`, so its logarithm is finite.
#[inline]
pub(crate) fn open_closed_uniform<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    1.0 - half_open_uniform(rng)
}

/// Uniform draw on `[0, 1)` with 53 random bits.
#[inline]
pub(crate) fn half_open_uniform<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}
