//! Seeded random stream used by the samplers and the Monte Carlo harness.
//!
//! A single 64-bit seed determines the whole stream. Substreams for parallel
//! replicates are derived with a SplitMix-style mix so that the replicate
//! index, not the thread schedule, decides what gets drawn.

use rand::Rng as _;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

use crate::scalar::Scalar;

/// Deterministic pseudo-random stream with a 64-bit seed.
#[derive(Debug, Clone)]
pub struct Rng {
    inner: ChaCha12Rng,
}

/// SplitMix64 finalizer; decorrelates derived seeds.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl Rng {
    pub fn seed_from_u64(seed: u64) -> Self {
        Rng {
            inner: ChaCha12Rng::seed_from_u64(seed),
        }
    }

    /// Derives an independent seed for a counter-indexed substream.
    pub fn derive_seed(base: u64, stream: u64) -> u64 {
        splitmix64(base ^ splitmix64(stream))
    }

    /// Substream for replicate `stream` of a run seeded with `base`.
    pub fn substream(base: u64, stream: u64) -> Self {
        Rng::seed_from_u64(Rng::derive_seed(base, stream))
    }

    /// One standard normal draw (ziggurat over the seeded stream).
    #[inline]
    pub fn standard_normal<T: Scalar>(&mut self) -> T {
        let x: f64 = self.inner.sample(StandardNormal);
        T::from_f64(x).expect("normal draw fits scalar")
    }

    /// Uniform draw on `[0, 1)`.
    #[inline]
    pub fn uniform<T: Scalar>(&mut self) -> T {
        let x: f64 = self.inner.gen::<f64>();
        T::from_f64(x).expect("uniform draw fits scalar")
    }

    /// Uniform integer in `0..bound`.
    #[inline]
    pub fn below(&mut self, bound: usize) -> usize {
        self.inner.gen_range(0..bound)
    }
}
