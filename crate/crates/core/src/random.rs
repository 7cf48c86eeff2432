//! Seeded random sources. Every stochastic routine takes an explicit seed or
//! generator; per-trial streams are derived from `(base_seed, trial, purpose)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

use crate::{CMatrix, CVector, C64};

pub type SimRng = ChaCha12Rng;

/// Purpose tags keep the channel, training and noise streams of one trial independent.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stream {
    Channel = 1,
    Training = 2,
    Noise = 3,
    Design = 4,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(base_seed: u64, trial: u64, stream: Stream) -> u64 {
    splitmix64(base_seed ^ splitmix64(trial.wrapping_add(0x5851_F42D_4C95_7F2D)) ^ splitmix64(stream as u64))
}

pub fn rng_from_seed(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

pub fn trial_rng(base_seed: u64, trial: u64, stream: Stream) -> SimRng {
    rng_from_seed(derive_seed(base_seed, trial, stream))
}

/// Circularly symmetric complex Gaussian with variance `var` (`E|z|^2 = var`).
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, var: f64) -> C64 {
    let s = (var / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(s * re, s * im)
}

pub fn complex_gaussian_vector<R: Rng + ?Sized>(rng: &mut R, n: usize, var: f64) -> CVector {
    CVector::from_fn(n, |_, _| complex_gaussian(rng, var))
}

pub fn complex_gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize, var: f64) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| complex_gaussian(rng, var))
}

/// Uniform draw from `{+1, -1, +j, -j}`.
pub fn quadriphase<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    match rng.random_range(0..4u8) {
        0 => C64::new(1.0, 0.0),
        1 => C64::new(0.0, 1.0),
        2 => C64::new(-1.0, 0.0),
        _ => C64::new(0.0, -1.0),
    }
}
