//! Finite Fourier series on the circle, `f(α) = Σ_k c_k e^{ikα}`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::linalg::{c, cis, I, ZERO};

/// Coefficients `c_k` for `k ∈ [-band, band]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Fourier {
    band: usize,
    coeffs: Vec<Complex64>,
}

/// JSON triple `[k, re, im]` for one coefficient.
pub type CoeffTriple = (i64, f64, f64);

impl Fourier {
    pub fn zero() -> Self {
        Self { band: 0, coeffs: vec![ZERO] }
    }

    pub fn constant(value: Complex64) -> Self {
        Self { band: 0, coeffs: vec![value] }
    }

    /// The single mode `e^{ikα}` with the given coefficient.
    pub fn monomial(k: i64, value: Complex64) -> Self {
        let band = k.unsigned_abs() as usize;
        let mut f = Self { band, coeffs: vec![ZERO; 2 * band + 1] };
        f.coeffs[(k + band as i64) as usize] = value;
        f
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (i64, Complex64)>) -> Self {
        let pairs: Vec<_> = pairs.into_iter().collect();
        let band = pairs.iter().map(|(k, _)| k.unsigned_abs() as usize).max().unwrap_or(0);
        let mut f = Self { band, coeffs: vec![ZERO; 2 * band + 1] };
        for (k, v) in pairs {
            f.coeffs[(k + band as i64) as usize] += v;
        }
        f
    }

    pub fn band(&self) -> usize {
        self.band
    }

    pub fn get(&self, k: i64) -> Complex64 {
        if k.unsigned_abs() as usize > self.band {
            ZERO
        } else {
            self.coeffs[(k + self.band as i64) as usize]
        }
    }

    /// Nonzero `(k, c_k)` pairs in increasing `k`.
    pub fn terms(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        let b = self.band as i64;
        self.coeffs
            .iter()
            .enumerate()
            .map(move |(i, &v)| (i as i64 - b, v))
            .filter(|(_, v)| *v != ZERO)
    }

    /// Smallest band containing every coefficient with modulus above `tol`.
    pub fn effective_band(&self, tol: f64) -> usize {
        self.terms()
            .filter(|(_, v)| v.norm() > tol)
            .map(|(k, _)| k.unsigned_abs() as usize)
            .max()
            .unwrap_or(0)
    }

    /// Drops coefficients with modulus at or below `tol` and shrinks the band.
    pub fn trimmed(&self, tol: f64) -> Self {
        Self::from_pairs(self.terms().filter(|(_, v)| v.norm() > tol))
    }

    pub fn l1_norm(&self) -> f64 {
        self.coeffs.iter().map(|v| v.norm()).sum()
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self { band: self.band, coeffs: self.coeffs.iter().map(|v| v * s).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::from_pairs(self.terms().chain(other.terms()))
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(c(-1.0, 0.0)))
    }

    /// Pointwise product (coefficient convolution).
    pub fn mul(&self, other: &Self) -> Self {
        let band = self.band + other.band;
        let mut coeffs = vec![ZERO; 2 * band + 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if *a == ZERO {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        Self { band, coeffs }
    }

    /// Pointwise complex conjugate: `c_k ↦ conj(c_{-k})`.
    pub fn conj(&self) -> Self {
        Self { band: self.band, coeffs: self.coeffs.iter().rev().map(|v| v.conj()).collect() }
    }

    /// Multiplies by `e^{ikα}`, shifting every index by `k`.
    pub fn shift(&self, k: i64) -> Self {
        Self::from_pairs(self.terms().map(|(j, v)| (j + k, v)))
    }

    /// Precomposition with the rotation `α ↦ α + θ`.
    pub fn rotate(&self, theta: f64) -> Self {
        let b = self.band as i64;
        Self {
            band: self.band,
            coeffs: self
                .coeffs
                .iter()
                .enumerate()
                .map(|(i, v)| v * cis((i as i64 - b) as f64 * theta))
                .collect(),
        }
    }

    pub fn eval(&self, alpha: f64) -> Complex64 {
        self.terms().map(|(k, v)| v * cis(k as f64 * alpha)).sum()
    }

    pub fn eval_derivative(&self, alpha: f64) -> Complex64 {
        self.terms().map(|(k, v)| v * I * k as f64 * cis(k as f64 * alpha)).sum()
    }

    /// `exp(i·self)` summed as a power series on coefficients until the
    /// ℓ¹ bound of the remaining tail drops below `tol`, then trimmed.
    pub fn exp_i(&self, tol: f64) -> Self {
        let c0 = self.get(0);
        let mut rest = self.clone();
        if self.band == 0 {
            return Self::constant((I * c0).exp());
        }
        rest.coeffs[self.band] = ZERO;
        let norm = rest.l1_norm();
        let ih = rest.scale(I);
        let mut sum = Self::constant(c(1.0, 0.0));
        let mut term = Self::constant(c(1.0, 0.0));
        let mut bound = 1.0;
        let mut n = 0usize;
        loop {
            n += 1;
            term = term.mul(&ih).scale(c(1.0 / n as f64, 0.0)).trimmed(1e-300);
            sum = sum.add(&term);
            bound *= norm / n as f64;
            // tail after term n is at most bound·(norm/(n+1))/(1 - norm/(n+1))
            let ratio = norm / (n + 1) as f64;
            if ratio < 0.5 && bound * ratio / (1.0 - ratio) < tol {
                break;
            }
        }
        sum.scale((I * c0).exp()).trimmed(tol * 1e-2)
    }

    /// Uniform samples `f(2πj/n)`, `j = 0..n`.
    pub fn sample(&self, n: usize) -> Vec<Complex64> {
        (0..n).map(|j| self.eval(2.0 * PI * j as f64 / n as f64)).collect()
    }

    pub fn to_triples(&self) -> Vec<CoeffTriple> {
        self.terms().map(|(k, v)| (k, v.re, v.im)).collect()
    }

    pub fn from_triples(triples: &[CoeffTriple]) -> Self {
        Self::from_pairs(triples.iter().map(|&(k, re, im)| (k, c(re, im))))
    }

    /// Largest coefficient difference.
    pub fn distance(&self, other: &Self) -> f64 {
        let band = self.band.max(other.band) as i64;
        (-band..=band)
            .map(|k| (self.get(k) - other.get(k)).norm())
            .fold(0.0, f64::max)
    }

    /// `max_k |c_{-k} - conj(c_k)|`: zero exactly for real-valued series.
    pub fn reality_defect(&self) -> f64 {
        self.distance(&self.conj())
    }

    /// Fourier coefficients of uniform samples by FFT, band-limited to
    /// `band` (requires `band < samples.len() / 2`).
    pub fn from_samples(samples: &[Complex64], band: usize) -> Result<Self> {
        let n = samples.len();
        if 2 * band >= n {
            return Err(LabError::InvalidArgument(format!(
                "band {band} not resolved by {n} samples"
            )));
        }
        let mut buf = samples.to_vec();
        let mut planner = rustfft::FftPlanner::<f64>::new();
        planner.plan_fft_forward(n).process(&mut buf);
        let scale = 1.0 / n as f64;
        Ok(Self::from_pairs((-(band as i64)..=band as i64).map(|k| {
            let idx = k.rem_euclid(n as i64) as usize;
            (k, buf[idx] * scale)
        })))
    }
}

/// Serde shape for a real trig polynomial: `{"coeffs": [[k, re, im], ...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoeffList {
    pub coeffs: Vec<CoeffTriple>,
}
