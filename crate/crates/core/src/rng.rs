//! Seeded random sources.
//!
//! All randomness in the crate goes through [`seeded`], which returns a
//! ChaCha8 stream cipher generator keyed from a 64-bit seed
//! (`rand_chacha::ChaCha8Rng::seed_from_u64`). ChaCha8 output is specified
//! independently of platform and word size, so seeded runs are reproducible.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::ParamVector;

pub type SeededRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform sample from the open Euclidean ball of `radius` around `center`.
///
/// Direction is a normalised standard Gaussian vector; the radius is
/// `radius * U^(1/d)` with `U` uniform on `[0, 1)`.
pub fn uniform_in_ball(rng: &mut SeededRng, center: &ParamVector, radius: f64) -> ParamVector {
    let d = center.len();
    loop {
        let dir: Vec<f64> = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let norm = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            continue;
        }
        let u: f64 = rng.random();
        let r = radius * u.powf(1.0 / d as f64);
        return ParamVector::new(
            center
                .iter()
                .zip(&dir)
                .map(|(c, x)| c + r * x / norm)
                .collect(),
        );
    }
}
