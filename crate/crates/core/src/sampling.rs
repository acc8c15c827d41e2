//! tau-distributed sampling: every node independently draws a uniformly random
//! subset of exactly `tau` coordinates from its own block.
//!
//! Draws are a pure function of `(seed, node, iteration)`, so any iteration of any
//! node can be replayed in isolation and nodes never coordinate.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::matrix::Partition;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy)]
pub struct SamplingPlan<'p> {
    partition: &'p Partition,
    tau: usize,
    seed: u64,
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Counter-based stream key for `(seed, node, iteration)`.
pub(crate) fn stream_rng(seed: u64, node: u64, iteration: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    let mut state = splitmix64(seed);
    state = splitmix64(state ^ node.wrapping_mul(0xD1B5_4A32_D192_ED03));
    state = splitmix64(state ^ iteration.wrapping_mul(0x8CB9_2BA7_2F3D_8DD7));
    for chunk in key.chunks_exact_mut(8) {
        state = splitmix64(state);
        chunk.copy_from_slice(&state.to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

impl<'p> SamplingPlan<'p> {
    pub fn new(partition: &'p Partition, tau: usize, seed: u64) -> Result<Self> {
        let s = partition.block_size();
        if tau == 0 || tau > s {
            return Err(Error::InvalidArgument(format!(
                "tau = {tau} must lie in [1, s = {s}]"
            )));
        }
        Ok(Self {
            partition,
            tau,
            seed,
        })
    }

    pub fn tau(&self) -> usize {
        self.tau
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn partition(&self) -> &'p Partition {
        self.partition
    }

    /// Positions (within block `node`) of the sampled coordinates, sorted.
    pub fn draw_local(&self, node: usize, iteration: u64) -> Vec<usize> {
        let s = self.partition.block_size();
        if self.tau == s {
            return (0..s).collect();
        }
        let mut rng = stream_rng(self.seed, node as u64, iteration);
        // partial Fisher-Yates: after step j the first j+1 slots are a uniform j+1-subset
        let mut idx: Vec<usize> = (0..s).collect();
        for j in 0..self.tau {
            let r = rng.random_range(j..s);
            idx.swap(j, r);
        }
        idx.truncate(self.tau);
        idx.sort_unstable();
        idx
    }

    /// Sampled global coordinates of node `node` at iteration `iteration`, sorted.
    pub fn draw(&self, node: usize, iteration: u64) -> Vec<usize> {
        let block = self.partition.block(node);
        self.draw_local(node, iteration)
            .into_iter()
            .map(|p| block[p])
            .collect()
    }

    /// `P(i in S and j in S)`.
    pub fn inclusion_prob<F: Scalar>(&self, i: usize, j: usize) -> F {
        let s = F::of_usize(self.partition.block_size());
        let tau = F::of_usize(self.tau);
        if i == j {
            tau / s
        } else if self.partition.block_of(i) == self.partition.block_of(j) {
            // s == 1 cannot hold two distinct coordinates of one block
            tau * (tau - F::one()) / (s * (s - F::one()))
        } else {
            tau * tau / (s * s)
        }
    }
}
