//! Symbolic Weyl algebra over zero-mean real trig polynomials.
//!
//! Only exponents and central phases are tracked. Products follow
//! `W(A)W(B) = e^{σ·i s(A,B)/2} W(A+B)` with the sign `σ` read off the Fock
//! representation (see `fock::weyl_relation`).

use serde::{Deserialize, Serialize};

use crate::config::Tolerances;
use crate::error::{LabError, Result};
use crate::fock::vacuum_expectation_det;
use crate::linalg::{cis, ONE};
use crate::mode_space::{
    hs_offdiag_norms, pairing_of, schwinger_of, HalfSpace, LoopFunction, ModeWindow, TrigPoly, WindowedOperator,
};
use num_complex::Complex64;

/// Sign of the central phase in `W(A)W(B) = e^{±i s/2} W(A+B)` measured in
/// the Fock representation.
pub const WEYL_PHASE_SIGN: f64 = 1.0;

/// Exponent of the generating functional as written in the source model.
pub const REFERENCE_KAPPA: f64 = 0.25;

/// A zero-mean real trig polynomial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TrigPoly", into = "TrigPoly")]
pub struct GeneratorElement(TrigPoly);

impl TryFrom<TrigPoly> for GeneratorElement {
    type Error = LabError;

    fn try_from(a: TrigPoly) -> Result<Self> {
        if a.mean().abs() > Tolerances::default().algebraic {
            return Err(LabError::InvalidArgument(format!("generator has nonzero mean {}", a.mean())));
        }
        Ok(Self(a.without_mean()))
    }
}

impl From<GeneratorElement> for TrigPoly {
    fn from(g: GeneratorElement) -> Self {
        g.0
    }
}

impl GeneratorElement {
    pub fn new(a: TrigPoly) -> Result<Self> {
        a.try_into()
    }

    pub fn zero() -> Self {
        Self(TrigPoly::zero())
    }

    pub fn poly(&self) -> &TrigPoly {
        &self.0
    }

    pub fn band(&self) -> usize {
        self.0.band()
    }

    pub fn add(&self, other: &Self) -> Self {
        Self(self.0.add(&other.0))
    }

    pub fn scale(&self, s: f64) -> Self {
        Self(self.0.scale(s))
    }

    pub fn distance(&self, other: &Self) -> f64 {
        self.0.series().distance(other.0.series())
    }

    pub fn is_zero(&self) -> bool {
        self.0.series().l1_norm() == 0.0
    }
}

/// `s(A, B)` through the shared symplectic form.
pub fn symplectic(a: &GeneratorElement, b: &GeneratorElement) -> Result<f64> {
    if a.is_zero() || b.is_zero() {
        return Ok(0.0);
    }
    schwinger_of(&a.0, &b.0)
}

/// `W(A₁)⋯W(Aₙ)` times a central phase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeylWord {
    pub letters: Vec<GeneratorElement>,
    #[serde(default = "unit_phase")]
    pub phase: Complex64,
}

fn unit_phase() -> Complex64 {
    ONE
}

impl WeylWord {
    pub fn new(letters: Vec<GeneratorElement>) -> Self {
        Self { letters, phase: ONE }
    }

    pub fn single(a: GeneratorElement) -> Self {
        Self::new(vec![a])
    }
}

/// Central phase of `W(A)W(B)` relative to `W(A+B)`.
pub fn product_phase(a: &GeneratorElement, b: &GeneratorElement) -> Result<Complex64> {
    Ok(cis(WEYL_PHASE_SIGN * symplectic(a, b)? / 2.0))
}

/// Normal form `(ΣAᵢ, phase)` by left-to-right reduction.
pub fn reduce(word: &WeylWord) -> Result<(GeneratorElement, Complex64)> {
    let mut acc = GeneratorElement::zero();
    let mut phase = word.phase;
    for a in &word.letters {
        phase *= product_phase(&acc, a)?;
        acc = acc.add(a);
    }
    Ok((acc, phase))
}

/// A parenthesization of a word: leaves index the letters.
#[derive(Debug, Clone, PartialEq)]
pub enum Bracketing {
    Leaf(usize),
    Pair(Box<Bracketing>, Box<Bracketing>),
}

impl Bracketing {
    /// All full parenthesizations of letters `lo..hi`.
    pub fn all(lo: usize, hi: usize) -> Vec<Self> {
        if hi - lo == 1 {
            return vec![Self::Leaf(lo)];
        }
        let mut out = Vec::new();
        for mid in lo + 1..hi {
            for l in Self::all(lo, mid) {
                for r in Self::all(mid, hi) {
                    out.push(Self::Pair(Box::new(l.clone()), Box::new(r)));
                }
            }
        }
        out
    }
}

/// Normal form of a word reduced pairwise along `tree`.
pub fn reduce_bracketed(word: &WeylWord, tree: &Bracketing) -> Result<(GeneratorElement, Complex64)> {
    fn go(letters: &[GeneratorElement], t: &Bracketing) -> Result<(GeneratorElement, Complex64)> {
        match t {
            Bracketing::Leaf(i) => Ok((letters[*i].clone(), ONE)),
            Bracketing::Pair(l, r) => {
                let (a, pa) = go(letters, l)?;
                let (b, pb) = go(letters, r)?;
                Ok((a.add(&b), pa * pb * product_phase(&a, &b)?))
            }
        }
    }
    let (a, p) = go(&word.letters, tree)?;
    Ok((a, p * word.phase))
}

/// Largest deviation between the bracketings of a word and the
/// left-to-right normal form.
pub fn association_spread(word: &WeylWord) -> Result<f64> {
    let n = word.letters.len();
    if n < 2 {
        return Ok(0.0);
    }
    let (a0, p0) = reduce(word)?;
    let mut worst: f64 = 0.0;
    for t in Bracketing::all(0, n) {
        let (a, p) = reduce_bracketed(word, &t)?;
        worst = worst.max(a.distance(&a0)).max((p - p0).norm());
    }
    Ok(worst)
}

/// Phase `c` with `W(A)W(B) = c·W(B)W(A)`.
pub fn commutation_phase(a: &GeneratorElement, b: &GeneratorElement) -> Result<Complex64> {
    let (_, ab) = reduce(&WeylWord::new(vec![a.clone(), b.clone()]))?;
    let (_, ba) = reduce(&WeylWord::new(vec![b.clone(), a.clone()]))?;
    Ok(ab / ba)
}

/// `f(A) = e^{−¼⟨A,A⟩}`.
pub fn generating_functional(a: &GeneratorElement) -> Result<f64> {
    Ok((-REFERENCE_KAPPA * pairing_norm(a)?).exp())
}

/// `⟨A, A⟩ = tr(P A P⊥ A P)`.
pub fn pairing_norm(a: &GeneratorElement) -> Result<f64> {
    if a.is_zero() {
        return Ok(0.0);
    }
    Ok(pairing_of(&a.0, &a.0)?.re)
}

/// Vacuum expectations of `exp(i dΓ(c·A))` across windows, and the exponent
/// `κ` in `e^{−κ⟨cA,cA⟩}` they imply.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KappaRow {
    pub amplitude: f64,
    pub pairing: f64,
    pub windows: Vec<usize>,
    pub vev: Vec<f64>,
    /// `|vev(n) − vev(largest)|` per window.
    pub deltas: Vec<f64>,
    /// Deltas never grow by more than rounding.
    pub convergent: bool,
    pub kappa: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KappaReport {
    pub rows: Vec<KappaRow>,
    pub kappa_mean: f64,
    pub kappa_spread: f64,
    pub reference_kappa: f64,
    /// The measured exponent equals `½`, the Gaussian value for `⟨A,A⟩`.
    pub matches_gaussian: bool,
    pub matches_reference: bool,
}

/// Floor below which window deltas count as converged.
pub const VEV_ROUNDING: f64 = 1e-13;

pub fn measure_kappa(a: &GeneratorElement, amplitudes: &[f64], windows: &[usize]) -> Result<KappaReport> {
    let tol = Tolerances::default();
    if windows.is_empty() || amplitudes.is_empty() {
        return Err(LabError::InvalidArgument("need at least one window and amplitude".into()));
    }
    let mut rows = Vec::new();
    for &amp in amplitudes {
        let g = a.scale(amp);
        let pairing = pairing_norm(&g)?;
        let mut vev = Vec::new();
        for &n in windows {
            let op = g.0.operator(ModeWindow::new(n)?)?;
            let z = vacuum_expectation_det(&op)?;
            if z.im.abs() > tol.fock {
                return Err(LabError::Consistency { what: "imaginary vacuum expectation", left: z.im, right: 0.0 });
            }
            vev.push(z.re);
        }
        let last = *vev.last().expect("nonempty");
        let deltas: Vec<f64> = vev.iter().map(|v| (v - last).abs()).collect();
        let convergent = deltas.windows(2).all(|d| d[1] <= d[0].max(VEV_ROUNDING));
        let kappa = if pairing > 0.0 { -last.ln() / pairing } else { f64::NAN };
        rows.push(KappaRow { amplitude: amp, pairing, windows: windows.to_vec(), vev, deltas, convergent, kappa });
    }
    let ks: Vec<f64> = rows.iter().map(|r| r.kappa).collect();
    let hi = ks.iter().copied().fold(f64::MIN, f64::max);
    let lo = ks.iter().copied().fold(f64::MAX, f64::min);
    let kappa_mean = ks.iter().sum::<f64>() / ks.len() as f64;
    Ok(KappaReport {
        rows,
        kappa_mean,
        kappa_spread: hi - lo,
        reference_kappa: REFERENCE_KAPPA,
        matches_gaussian: (kappa_mean - 0.5).abs() <= tol.kappa_spread,
        matches_reference: (kappa_mean - REFERENCE_KAPPA).abs() <= tol.kappa_spread,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RequirementsReport {
    /// Off-diagonal Hilbert–Schmidt norms of every generator settle.
    pub hilbert_schmidt: bool,
    /// Generators commute as multiplication operators.
    pub abelian: bool,
    /// `Re⟨·,·⟩` is positive definite on the span.
    pub nondegenerate: bool,
    /// `V₁ L V₁⁻¹ = L`.
    pub v1_stable: bool,
    pub gram_min_eigenvalue: f64,
    pub all: bool,
}

pub fn requirements_checklist(generators: &[TrigPoly], v1: &LoopFunction) -> Result<RequirementsReport> {
    let tol = Tolerances::default();
    let band = generators.iter().map(TrigPoly::band).max().unwrap_or(0).max(v1.total_band()).max(1);
    let window = ModeWindow::new(4 * band + 4)?;
    let cut = HalfSpace::nonnegative();

    let mut hilbert_schmidt = true;
    for a in generators {
        hilbert_schmidt &= hs_offdiag_norms(a, cut, window)?.converged;
    }

    let ops: Vec<_> = generators.iter().map(|a| a.build(window)).collect::<Result<_>>()?;
    let inner = window.n_max() as i64 - 2 * band as i64;
    let interior = |m: &crate::mode_space::OneParticleOperator, o: &crate::mode_space::OneParticleOperator| {
        let mut worst: f64 = 0.0;
        for i in -inner..=inner {
            for j in -inner..=inner {
                worst = worst.max((m.entry(i, j) - o.entry(i, j)).norm());
            }
        }
        worst
    };
    let mut abelian = true;
    for (i, a) in ops.iter().enumerate() {
        for b in &ops[i + 1..] {
            abelian &= interior(&a.mul(b)?, &b.mul(a)?) <= tol.algebraic;
        }
    }

    let k = generators.len();
    let mut gram = nalgebra::DMatrix::<f64>::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            gram[(i, j)] = pairing_of(&generators[i], &generators[j])?.re;
        }
    }
    let gram = (&gram + gram.transpose()) * 0.5;
    let gram_min_eigenvalue =
        if k == 0 { 0.0 } else { gram.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min) };
    let nondegenerate = k > 0 && gram_min_eigenvalue > tol.algebraic;

    let v = v1.build(window)?;
    let mut v1_stable = true;
    for a in &ops {
        let conj = v.mul(a)?.mul(&v.adjoint())?;
        v1_stable &= interior(&conj, a) <= tol.algebraic;
    }

    let all = hilbert_schmidt && abelian && nondegenerate && v1_stable;
    Ok(RequirementsReport { hilbert_schmidt, abelian, nondegenerate, v1_stable, gram_min_eigenvalue, all })
}
