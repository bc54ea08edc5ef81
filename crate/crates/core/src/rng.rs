//! Seed-addressable random streams.
//!
//! Every random quantity is drawn from a ChaCha8 generator whose seed is a
//! pure function of a path of integers, e.g. `(master, cell, replicate, draw)`.
//! Work items can therefore run on any number of threads, in any order, and
//! still consume exactly the same variates.
//!
//! Standard normals come from `rand_distr::StandardNormal` (Ziggurat method);
//! ChaCha8 output and the Ziggurat tables are platform independent.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Random generator used throughout the crate.
pub type StreamRng = ChaCha8Rng;

// splitmix64 finalizer
#[inline]
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// A node in the tree of random streams.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct StreamKey(u64);

impl StreamKey {
    pub fn new(seed: u64) -> Self {
        StreamKey(mix(seed ^ 0x6a09_e667_f3bc_c908))
    }

    /// Child stream `index` of this node.
    pub fn child(self, index: u64) -> Self {
        StreamKey(mix(self.0.wrapping_add(0x9e37_79b9_7f4a_7c15).rotate_left(17) ^ mix(index)))
    }

    /// Child addressed by a label, hashed with FNV-1a.
    pub fn child_named(self, label: &str) -> Self {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in label.bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        self.child(h)
    }

    pub fn value(self) -> u64 {
        self.0
    }

    pub fn rng(self) -> StreamRng {
        StreamRng::seed_from_u64(self.0)
    }
}

/// Fills `out` with i.i.d. standard normal variates.
pub fn fill_standard_normal<R: rand::Rng + ?Sized>(rng: &mut R, out: &mut [f64]) {
    for v in out {
        *v = StandardNormal.sample(rng);
    }
}

/// A standard normal variate.
#[inline]
pub fn standard_normal<R: rand::Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}
