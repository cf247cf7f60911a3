//! Seeded, reproducible randomness.
//!
//! Everything stochastic in the toolkit flows through [`NoiseSampler`] or a
//! seed derived with [`derive_seed`], so any record, estimate or training run
//! can be regenerated from a master seed and an index.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// SplitMix64 finalizer; decorrelates consecutive seeds.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives an independent child seed from `(seed, index)`.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    splitmix64(seed ^ splitmix64(index.wrapping_add(1)))
}

/// Stream of circularly-symmetric complex Gaussian noise vectors,
/// `n ~ CN(0, I)`: each component has independent real and imaginary parts of
/// variance 1/2. The same seed always yields the same sequence.
#[derive(Debug, Clone)]
pub struct NoiseSampler {
    seed: u64,
    rng: ChaCha8Rng,
    position: u64,
}

impl NoiseSampler {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
            position: 0,
        }
    }

    /// Independent sampler for a parallel task or a derived purpose; children
    /// with distinct indices have decorrelated streams.
    pub fn child(&self, index: u64) -> Self {
        Self::new(derive_seed(self.seed, index))
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Count of complex samples drawn so far.
    pub fn position(&self) -> u64 {
        self.position
    }

    /// One noise vector of the given dimension.
    pub fn draw(&mut self, dim: usize) -> Vec<Complex64> {
        let mut v = Vec::with_capacity(dim);
        for _ in 0..dim {
            let re: f64 = self.rng.sample(StandardNormal);
            let im: f64 = self.rng.sample(StandardNormal);
            v.push(Complex64::new(
                re * std::f64::consts::FRAC_1_SQRT_2,
                im * std::f64::consts::FRAC_1_SQRT_2,
            ));
        }
        self.position += dim as u64;
        v
    }

    /// `count` noise vectors, drawn in order.
    pub fn draw_many(&mut self, dim: usize, count: usize) -> Vec<Vec<Complex64>> {
        (0..count).map(|_| self.draw(dim)).collect()
    }
}
