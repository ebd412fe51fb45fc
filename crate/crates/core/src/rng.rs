//! Seeded random sources shared by every generator in the crate.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::numerics::ComplexMatrix;

/// The generator used throughout. ChaCha output is stable across platforms.
pub type SimRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

/// One draw from CN(0, 1).
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Matrix with i.i.d. CN(0, 1) entries.
pub fn complex_normal_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> ComplexMatrix {
    // Column-major fill order keeps draws aligned with `vec` ordering.
    let data: Vec<Complex64> = (0..rows * cols).map(|_| complex_normal(rng)).collect();
    ComplexMatrix::from_vec(rows, cols, data)
}

/// Matrix of unit-modulus entries exp(j u), u ~ U[0, 2pi).
pub fn random_phase_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> ComplexMatrix {
    let data: Vec<Complex64> = (0..rows * cols)
        .map(|_| Complex64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU)))
        .collect();
    ComplexMatrix::from_vec(rows, cols, data)
}

/// Independent seed for stream `stream` of item `index` under `base` (splitmix64 mixing).
pub fn derive_seed(base: u64, index: u64, stream: u64) -> u64 {
    let mut z = base
        .wrapping_add(index.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(stream.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
