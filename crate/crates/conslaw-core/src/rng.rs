//! Seeded random number generation with a pinned value stream.
//!
//! Every stochastic routine in the crate draws from [`Rng`], which wraps the
//! ChaCha8 stream cipher keyed from a 64-bit seed. The uniform and normal
//! transformations below are fixed by this crate, so two runs with the same
//! seed produce bit-identical draws on every platform — independent of any
//! external distribution crate's internals.
//!
//! Algorithm, documented for reproducibility:
//! - raw stream: ChaCha8, seeded by writing the little-endian 64-bit seed into
//!   the first 8 bytes of the 32-byte key (remaining bytes zero);
//! - `uniform()` in [0, 1): take the next `u64`, keep the top 53 bits,
//!   multiply by 2⁻⁵³;
//! - `normal()`: Marsaglia polar method on pairs of `uniform()` draws, one
//!   spare value cached;
//! - `split(tag)`: child RNG seeded with `next_u64() ^ tag`, used to derive
//!   independent per-task streams (per seed index, per worker) that do not
//!   perturb the parent's consumption pattern beyond one draw.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::rmath;

/// Deterministic RNG: identical seeds yield identical sequences of raw,
/// uniform, and normal draws.
#[derive(Clone, Debug)]
pub struct Rng {
    inner: ChaCha8Rng,
    spare_normal: Option<f64>,
}

impl Rng {
    /// Creates an RNG from a 64-bit seed.
    pub fn seed_from(seed: u64) -> Self {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&seed.to_le_bytes());
        Rng { inner: ChaCha8Rng::from_seed(key), spare_normal: None }
    }

    /// Next raw 64-bit value from the stream.
    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform draw in `[0, 1)` with 53 bits of precision.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / 9007199254740992.0)
    }

    /// Standard normal draw (Marsaglia polar method).
    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        loop {
            let u = 2.0 * self.uniform() - 1.0;
            let v = 2.0 * self.uniform() - 1.0;
            let s = u * u + v * v;
            if s > 0.0 && s < 1.0 {
                let f = rmath::sqrt(-2.0 * rmath::ln(s) / s);
                self.spare_normal = Some(v * f);
                return u * f;
            }
        }
    }

    /// Fills `out` with standard normal draws.
    pub fn fill_normal(&mut self, out: &mut [f64]) {
        for x in out.iter_mut() {
            *x = self.normal();
        }
    }

    /// Vector of `n` standard normal draws.
    pub fn normal_vec(&mut self, n: usize) -> alloc::vec::Vec<f64> {
        let mut v = alloc::vec![0.0; n];
        self.fill_normal(&mut v);
        v
    }

    /// Uniform integer in `[0, bound)` by rejection on the top bits.
    pub fn below(&mut self, bound: usize) -> usize {
        assert!(bound > 0, "below(0) is undefined");
        let b = bound as u64;
        // Rejection sampling keeps the distribution exactly uniform.
        let zone = u64::MAX - (u64::MAX % b);
        loop {
            let r = self.next_u64();
            if r < zone {
                return (r % b) as usize;
            }
        }
    }

    /// Derives an independent child stream; `tag` separates siblings derived
    /// at the same point of the parent stream.
    pub fn split(&mut self, tag: u64) -> Rng {
        Rng::seed_from(self.next_u64() ^ tag.wrapping_mul(0x9E3779B97F4A7C15))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_seeds_identical_streams() {
        let mut a = Rng::seed_from(42);
        let mut b = Rng::seed_from(42);
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
        let mut a = Rng::seed_from(7);
        let mut b = Rng::seed_from(7);
        for _ in 0..100 {
            assert_eq!(a.normal().to_bits(), b.normal().to_bits());
        }
    }

    #[test]
    fn uniform_in_range_and_seed_sensitive() {
        let mut a = Rng::seed_from(1);
        let mut b = Rng::seed_from(2);
        let mut differs = false;
        for _ in 0..50 {
            let x = a.uniform();
            assert!((0.0..1.0).contains(&x));
            if x != b.uniform() {
                differs = true;
            }
        }
        assert!(differs);
    }

    #[test]
    fn normal_moments_are_plausible() {
        let mut rng = Rng::seed_from(3);
        let n = 20000;
        let (mut s1, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            let z = rng.normal();
            s1 += z;
            s2 += z * z;
        }
        let mean = s1 / n as f64;
        let var = s2 / n as f64 - mean * mean;
        assert!(mean.abs() < 0.05, "mean {mean}");
        assert!((var - 1.0).abs() < 0.05, "var {var}");
    }
}
