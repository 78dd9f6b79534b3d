//! Deterministic pseudo-random streams.
//!
//! [`Prng`] is SplitMix64 (Steele, Lea & Flood, 2014): a 64-bit state advanced
//! by the golden-gamma constant `0x9E3779B97F4A7C15` and finalised with the
//! `mix64` variant-13 mixer. The raw `u64` stream is identical on every
//! platform.
//!
//! Substreams are keyed by `(seed, purpose-tag[, index])`:
//!
//! ```text
//! key(seed, tag)        = mix64(seed ^ mix64(fnv1a64(tag)))
//! key(seed, tag, index) = mix64(key(seed, tag) ^ mix64(index + GAMMA))
//! ```
//!
//! so components can draw from their own streams without sharing state and the
//! result never depends on the order in which substreams are created.

use rand_core::{impls, RngCore};

const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Derives the starting state of the substream for `(seed, tag)`.
pub fn substream_key(seed: u64, tag: &str) -> u64 {
    mix64(seed ^ mix64(fnv1a64(tag.as_bytes())))
}

/// SplitMix64 generator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prng {
    state: u64,
}

impl Prng {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    /// Independent stream for one purpose, e.g. `"encoder-init"`.
    pub fn substream(seed: u64, tag: &str) -> Self {
        Self::new(substream_key(seed, tag))
    }

    /// Independent stream for one item of a family, e.g. noise for sample `index`.
    pub fn indexed(seed: u64, tag: &str, index: u64) -> Self {
        Self::new(mix64(
            substream_key(seed, tag) ^ mix64(index.wrapping_add(GAMMA)),
        ))
    }

    /// Splits off a child stream keyed by `tag`, advancing `self` by one draw.
    pub fn fork(&mut self, tag: &str) -> Self {
        let base = self.next_u64();
        Self::substream(base, tag)
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

impl RngCore for Prng {
    fn next_u32(&mut self) -> u32 {
        (self.next_u64() >> 32) as u32
    }

    fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GAMMA);
        mix64(self.state)
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        impls::fill_bytes_via_next(self, dst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_reference_splitmix64() {
        // First outputs of the reference C implementation seeded with 1234567.
        let mut rng = Prng::new(1234567);
        let expected = [
            6457827717110365317u64,
            3203168211198807973,
            9817491932198370423,
            4593380528125082431,
            16408922859458223821,
        ];
        for e in expected {
            assert_eq!(rng.next_u64(), e);
        }
    }

    #[test]
    fn substreams_are_distinct_and_reproducible() {
        let a = Prng::substream(7, "encoder-init").next_u64();
        let b = Prng::substream(7, "mi-public").next_u64();
        let c = Prng::substream(7, "encoder-init").next_u64();
        assert_ne!(a, b);
        assert_eq!(a, c);
        assert_ne!(
            Prng::indexed(7, "noise", 0).next_u64(),
            Prng::indexed(7, "noise", 1).next_u64()
        );
    }

    #[test]
    fn unit_interval() {
        let mut rng = Prng::new(3);
        for _ in 0..10_000 {
            let u = rng.next_f64();
            assert!((0.0..1.0).contains(&u));
        }
    }
}
