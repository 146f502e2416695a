//! Seed handling. Every random stream in the crate is a ChaCha8 generator
//! keyed by a 64-bit seed; derived seeds come from a counter-based split of
//! a root seed so that stages never share a stream.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn label_hash(label: &str) -> u64 {
    // FNV-1a, stable across platforms and releases.
    label.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01B3)
    })
}

/// Derives child seeds from a root seed as `mix(root, label, counter)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedSplitter {
    root: u64,
}

impl SeedSplitter {
    pub fn new(root: u64) -> Self {
        Self { root }
    }

    pub fn root(&self) -> u64 {
        self.root
    }

    pub fn derive(&self, label: &str, counter: u64) -> u64 {
        splitmix64(splitmix64(self.root ^ label_hash(label)).wrapping_add(counter))
    }

    pub fn child(&self, label: &str, counter: u64) -> SeedSplitter {
        SeedSplitter::new(self.derive(label, counter))
    }
}
