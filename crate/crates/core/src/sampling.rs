//! Seeded random inputs for property sweeps and suites.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::fourier::Fourier;
use crate::linalg::{c, cis, CMat};
use crate::mode_space::{LoopFunction, TrigPoly};
use num_complex::Complex64;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Real trig polynomial with `|A_k| ≤ amplitude` for `1 ≤ k ≤ band`; no
/// constant term.
pub fn trig_poly(rng: &mut impl Rng, band: usize, amplitude: f64) -> TrigPoly {
    let pairs = (1..=band as i64).flat_map(|k| {
        let z = c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)) * (amplitude / 2f64.sqrt());
        [(k, z), (-k, z.conj())]
    });
    let pairs: Vec<_> = pairs.collect();
    TrigPoly::from_series(Fourier::from_pairs(pairs)).expect("built real")
}

/// Loop with winding in `windings` and a smooth phase of bandwidth `band`.
pub fn loop_function(
    rng: &mut impl Rng,
    windings: std::ops::RangeInclusive<i64>,
    band: usize,
    amplitude: f64,
) -> LoopFunction {
    let w = rng.random_range(windings);
    let band = rng.random_range(0..=band);
    let mut h = trig_poly(rng, band, amplitude);
    h = h.add(&TrigPoly::constant(rng.random_range(-3.0..3.0)));
    LoopFunction::new(w, h)
}

pub fn unit_complex(rng: &mut impl Rng) -> Complex64 {
    cis(rng.random_range(0.0..std::f64::consts::TAU))
}

pub fn complex_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> CMat {
    CMat::from_fn(rows, cols, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
}
