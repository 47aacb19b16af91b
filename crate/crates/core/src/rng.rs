//! Reproducible randomness.
//!
//! Every random draw comes from a ChaCha8 stream keyed by the run seed and
//! a `(domain, a, b)` triple, e.g. `(SKI, file, phase)`. Streams are
//! counter based, so draws for one component never shift another
//! component's draws. The mapping below is part of the output format:
//! changing it changes every randomized report.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Domain tags for [`Seed::stream`].
pub mod domain {
    pub const MARKING: u64 = 1;
    pub const SKI_RENTAL: u64 = 2;
    pub const ADVERSARY: u64 = 3;
    pub const GENERATOR: u64 = 4;
    pub const TRIAL: u64 = 5;
    pub const META_INNER: u64 = 6;
    pub const META_SKI: u64 = 7;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Seed(pub u64);

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl Seed {
    /// Independent generator for `(domain, a, b)`.
    pub fn stream(self, domain: u64, a: u64, b: u64) -> ChaCha8Rng {
        let mut key = [0u8; 32];
        let words = [
            splitmix(self.0),
            splitmix(self.0 ^ splitmix(domain)),
            splitmix(domain.wrapping_mul(0xa076_1d64_78bd_642f) ^ self.0.rotate_left(17)),
            splitmix(!self.0),
        ];
        for (chunk, w) in key.chunks_mut(8).zip(words) {
            chunk.copy_from_slice(&w.to_le_bytes());
        }
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(splitmix(a) ^ b.rotate_left(32) ^ b);
        rng
    }

    /// Derived seed for a sub-component.
    pub fn child(self, domain: u64, index: u64) -> Seed {
        Seed(splitmix(splitmix(self.0 ^ domain.rotate_left(40)) ^ index))
    }
}
