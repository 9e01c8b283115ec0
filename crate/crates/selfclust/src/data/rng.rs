//! Deterministic seeded randomness shared by all modules.
//!
//! A single master seed fans out into independent named substreams, one per
//! purpose (centroid init, weight init, shuffling, synthetic data). Each
//! substream is derived purely from (seed, purpose, index), so the values a
//! consumer draws never depend on what other consumers drew or in which
//! order the substreams were requested.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Named purposes for random substreams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StreamPurpose {
    InitCentroids,
    InitWeights,
    Shuffling,
    SynthData,
}

impl StreamPurpose {
    fn tag(self) -> &'static str {
        match self {
            StreamPurpose::InitCentroids => "init-centroids",
            StreamPurpose::InitWeights => "init-weights",
            StreamPurpose::Shuffling => "shuffling",
            StreamPurpose::SynthData => "synth-data",
        }
    }
}

/// Master seed with named, index-addressed substreams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeededRng {
    seed: u64,
}

/// FNV-1a over bytes; stable, dependency-free tag hashing.
fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// SplitMix64 finalizer; decorrelates structured inputs.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        SeededRng { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Derives an independent master seed, e.g. one per pipeline iteration,
    /// so repeated consumers (learner epochs, restarts) draw uncorrelated
    /// streams while staying fully determined by (seed, salt).
    pub fn fork(&self, salt: u64) -> SeededRng {
        SeededRng::new(mix(
            self.seed ^ mix(salt.wrapping_add(0x517c_c1b7_2722_0a95))
        ))
    }

    /// A fresh generator for (purpose, index), independent of every other
    /// substream. `index` distinguishes repeated uses of one purpose, e.g.
    /// restart number or iteration number.
    pub fn substream(&self, purpose: StreamPurpose, index: u64) -> ChaCha8Rng {
        let p = fnv1a(purpose.tag().as_bytes());
        let mut key = [0u8; 32];
        let words = [
            mix(self.seed),
            mix(self.seed ^ p),
            mix(p ^ index.wrapping_mul(0x9e37_79b9_7f4a_7c15)),
            mix(self.seed.wrapping_add(index)),
        ];
        for (i, w) in words.iter().enumerate() {
            key[i * 8..(i + 1) * 8].copy_from_slice(&w.to_le_bytes());
        }
        ChaCha8Rng::from_seed(key)
    }
}
