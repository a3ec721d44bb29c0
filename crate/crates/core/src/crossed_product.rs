//! Symbolic Z-graded crossed product `Σ Aₙ Vⁿ` over `A = C(S¹) ⊗ B`, with
//! `κ = δ ⊗ ν` where `δ` is a rigid rotation of the circle and `ν` a formal
//! automorphism of `B`, plus the stabilizer action of unimodular functions.
//!
//! Coefficients are sums of terms `f ⊗ b` with `f` a Fourier series and `b`
//! a product of Weyl letters, each tagged with the power of `ν` applied to
//! it. Scalar phases from Weyl reductions are absorbed into `f`.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::fourier::{CoeffTriple, Fourier};
use crate::linalg::{cis, ONE};
use crate::mode_space::{symplectic_quadrature, LoopFunction, TrigPoly};
use crate::weyl::{product_phase, GeneratorElement};
use num_complex::Complex64;

/// Sample count for unimodularity checks.
pub const UNIMODULAR_POINTS: usize = 1024;
pub const UNIMODULAR_TOL: f64 = 1e-10;
/// Tolerance for symbolic identities between coefficient lists.
pub const SYMBOLIC_TOL: f64 = 1e-11;

/// Closed arc `[start, start + length]` on the circle, angles in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Arc {
    pub start: f64,
    pub end: f64,
}

impl Arc {
    pub fn new(start: f64, end: f64) -> Result<Self> {
        let len = end - start;
        if !(len > 0.0 && len < TAU) {
            return Err(LabError::InvalidArgument(format!("arc ({start}, {end}) must have length in (0, 2π)")));
        }
        Ok(Self { start, end })
    }

    fn normalized(&self) -> (f64, f64) {
        let s = self.start.rem_euclid(TAU);
        (s, s + (self.end - self.start))
    }

    pub fn length(&self) -> f64 {
        self.end - self.start
    }

    pub fn contains_angle(&self, alpha: f64) -> bool {
        let (s, e) = self.normalized();
        let a = alpha.rem_euclid(TAU);
        (a >= s && a <= e) || (a + TAU >= s && a + TAU <= e)
    }

    /// Closures do not meet.
    pub fn disjoint(&self, other: &Self) -> bool {
        let (s1, e1) = self.normalized();
        let (s2, e2) = other.normalized();
        [-TAU, 0.0, TAU].iter().all(|k| e1 < s2 + k || e2 + k < s1)
    }

    pub fn is_within(&self, other: &Self) -> bool {
        let (s1, e1) = self.normalized();
        let (s2, e2) = other.normalized();
        [-TAU, 0.0, TAU].iter().any(|k| s1 >= s2 + k && e1 <= e2 + k)
    }
}

/// Finite Fourier series on the circle with an optional support claim.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CircleSpec", into = "CircleSpec")]
pub struct CircleFn {
    series: Fourier,
    support: Option<Arc>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CircleSpec {
    coeffs: Vec<CoeffTriple>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    support: Option<Arc>,
}

impl TryFrom<CircleSpec> for CircleFn {
    type Error = LabError;
    fn try_from(s: CircleSpec) -> Result<Self> {
        if let Some(a) = s.support {
            Arc::new(a.start, a.end)?;
        }
        Ok(Self { series: Fourier::from_triples(&s.coeffs), support: s.support })
    }
}

impl From<CircleFn> for CircleSpec {
    fn from(f: CircleFn) -> Self {
        CircleSpec { coeffs: f.series.to_triples(), support: f.support }
    }
}

impl CircleFn {
    pub fn new(series: Fourier) -> Self {
        Self { series, support: None }
    }

    pub fn one() -> Self {
        Self::new(Fourier::constant(ONE))
    }

    /// `μ ↦ μ^k`.
    pub fn monomial(k: i64) -> Self {
        Self::new(Fourier::monomial(k, ONE))
    }

    pub fn from_loop(f: &LoopFunction) -> Self {
        Self::new(f.coefficients())
    }

    pub fn series(&self) -> &Fourier {
        &self.series
    }

    pub fn support(&self) -> Option<Arc> {
        self.support
    }

    pub fn eval(&self, alpha: f64) -> Complex64 {
        self.series.eval(alpha)
    }

    pub fn mul(&self, other: &Self) -> Self {
        Self::new(self.series.mul(&other.series))
    }

    pub fn scale(&self, z: Complex64) -> Self {
        Self::new(self.series.scale(z))
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::new(self.series.add(&other.series))
    }

    pub fn conj(&self) -> Self {
        Self::new(self.series.conj())
    }

    /// `f ∘ σ^j` for the rotation by `θ`: `c_k ↦ c_k e^{ikjθ}`.
    pub fn rotated(&self, theta: f64) -> Self {
        Self { series: self.series.rotate(theta), support: self.support.map(|a| Arc { start: a.start - theta, end: a.end - theta }) }
    }

    pub fn unimodularity_defect(&self) -> f64 {
        self.series.sample(UNIMODULAR_POINTS).iter().map(|z| (z.norm() - 1.0).abs()).fold(0.0, f64::max)
    }

    pub fn check_unimodular(&self) -> Result<()> {
        let d = self.unimodularity_defect();
        if d > UNIMODULAR_TOL {
            return Err(LabError::NotUnimodular { modulus: 1.0 + d });
        }
        Ok(())
    }
}

/// `ν^power(W(A))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BLetter {
    #[serde(default)]
    pub nu: i64,
    pub generator: GeneratorElement,
}

/// `f ⊗ ν^{p₁}(W(A₁)) ⋯ ν^{pₖ}(W(Aₖ))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub circle: CircleFn,
    #[serde(default)]
    pub letters: Vec<BLetter>,
}

impl Term {
    pub fn scalar(circle: CircleFn) -> Self {
        Self { circle, letters: Vec::new() }
    }

    /// Merges neighbouring letters under the same power of `ν` and drops
    /// trivial ones; phases go into the circle factor.
    pub fn canonical(mut self) -> Result<Self> {
        let mut out: Vec<BLetter> = Vec::new();
        for l in self.letters.drain(..) {
            if l.generator.is_zero() {
                continue;
            }
            match out.last_mut() {
                Some(prev) if prev.nu == l.nu => {
                    let phase = product_phase(&prev.generator, &l.generator)?;
                    self.circle = self.circle.scale(phase);
                    prev.generator = prev.generator.add(&l.generator);
                    if prev.generator.poly().series().l1_norm() < 1e-15 {
                        out.pop();
                    }
                }
                _ => out.push(l),
            }
        }
        self.letters = out;
        Ok(self)
    }

    fn same_letters(&self, other: &Self) -> bool {
        self.letters.len() == other.letters.len()
            && self
                .letters
                .iter()
                .zip(&other.letters)
                .all(|(a, b)| a.nu == b.nu && a.generator.distance(&b.generator) < SYMBOLIC_TOL)
    }

    fn mul(&self, other: &Self) -> Result<Self> {
        let mut letters = self.letters.clone();
        letters.extend(other.letters.iter().cloned());
        Self { circle: self.circle.mul(&other.circle), letters }.canonical()
    }
}

/// `κ(f ⊗ b) = (f ∘ σ) ⊗ ν(b)`.
pub fn kappa(term: &Term, theta: f64) -> Term {
    kappa_power(term, theta, 1)
}

pub fn kappa_power(term: &Term, theta: f64, k: i64) -> Term {
    Term {
        circle: term.circle.rotated(k as f64 * theta),
        letters: term.letters.iter().map(|l| BLetter { nu: l.nu + k, generator: l.generator.clone() }).collect(),
    }
}

/// Finite sum `Σₙ Xₙ Vⁿ` with rotation angle `θ₀`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradedElement {
    pub theta: f64,
    pub components: BTreeMap<i64, Vec<Term>>,
}

impl GradedElement {
    pub fn zero(theta: f64) -> Self {
        Self { theta, components: BTreeMap::new() }
    }

    /// `f ⊗ 1 · Vⁿ`.
    pub fn monomial(theta: f64, degree: i64, circle: CircleFn) -> Self {
        Self { theta, components: BTreeMap::from([(degree, vec![Term::scalar(circle)])]) }
    }

    /// `Vⁿ`.
    pub fn v_power(theta: f64, n: i64) -> Self {
        Self::monomial(theta, n, CircleFn::one())
    }

    pub fn from_terms(theta: f64, terms: impl IntoIterator<Item = (i64, Term)>) -> Result<Self> {
        let mut x = Self::zero(theta);
        for (n, t) in terms {
            x.components.entry(n).or_default().push(t.canonical()?);
        }
        Ok(x)
    }

    pub fn degrees(&self) -> Vec<i64> {
        self.components.iter().filter(|(_, t)| !t.is_empty()).map(|(n, _)| *n).collect()
    }

    pub fn degree_part(&self, n: i64) -> Self {
        let mut x = Self::zero(self.theta);
        if let Some(t) = self.components.get(&n) {
            x.components.insert(n, t.clone());
        }
        x
    }

    fn same_theta(&self, other: &Self) -> Result<()> {
        if (self.theta - other.theta).abs() > 0.0 {
            return Err(LabError::InvalidArgument("rotation angles differ".into()));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_theta(other)?;
        let mut x = self.clone();
        for (n, ts) in &other.components {
            x.components.entry(*n).or_default().extend(ts.iter().cloned());
        }
        Ok(x)
    }

    /// `(X·Y)ₙ = Σ_k X_k κ^k(Y_{n−k})`.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.same_theta(other)?;
        let mut x = Self::zero(self.theta);
        for (&k, xs) in &self.components {
            for (&m, ys) in &other.components {
                let out = x.components.entry(k + m).or_default();
                for a in xs {
                    for b in ys {
                        out.push(a.mul(&kappa_power(b, self.theta, k))?);
                    }
                }
            }
        }
        Ok(x)
    }

    /// Multiplies every degree-`n` coefficient by `fₙ`.
    fn weight(&self, f: impl Fn(i64) -> Result<CircleFn>) -> Result<Self> {
        let mut x = Self::zero(self.theta);
        for (&n, ts) in &self.components {
            let w = f(n)?;
            x.components.insert(n, ts.iter().map(|t| Term { circle: w.mul(&t.circle), letters: t.letters.clone() }).collect());
        }
        Ok(x)
    }

    /// Terms with equal B-parts merged.
    fn collected(&self) -> BTreeMap<i64, Vec<Term>> {
        let mut out = BTreeMap::new();
        for (&n, ts) in &self.components {
            let mut merged: Vec<Term> = Vec::new();
            for t in ts {
                match merged.iter_mut().find(|m| m.same_letters(t)) {
                    Some(m) => m.circle = m.circle.add(&t.circle),
                    None => merged.push(t.clone()),
                }
            }
            out.insert(n, merged);
        }
        out
    }

    /// Largest coefficient difference after collecting terms.
    pub fn distance(&self, other: &Self) -> f64 {
        let a = self.collected();
        let b = other.collected();
        let mut worst: f64 = 0.0;
        let degrees: std::collections::BTreeSet<i64> = a.keys().chain(b.keys()).copied().collect();
        let empty = Vec::new();
        for n in degrees {
            let (xa, xb) = (a.get(&n).unwrap_or(&empty), b.get(&n).unwrap_or(&empty));
            for t in xa {
                let diff = match xb.iter().find(|u| u.same_letters(t)) {
                    Some(u) => t.circle.series.distance(&u.circle.series),
                    None => t.circle.series.l1_norm(),
                };
                worst = worst.max(diff);
            }
            for u in xb {
                if !xa.iter().any(|t| t.same_letters(u)) {
                    worst = worst.max(u.circle.series.l1_norm());
                }
            }
        }
        worst
    }
}

/// `α_ζ`: degree `n` picks up `ζⁿ`.
pub fn gauge_action(zeta: Complex64, x: &GradedElement) -> Result<GradedElement> {
    x.weight(|n| Ok(CircleFn::one().scale(zeta.powi(n as i32))))
}

/// `Zₙ` with `β_f(Vⁿ) = Zₙ Vⁿ`: `Π_{j=1..n} f∘σʲ` for `n ≥ 1`,
/// `Π_{j=0..|n|−1} conj(f)∘σ^{−j}` for `n ≤ −1`.
pub fn cocycle(f: &CircleFn, n: i64, theta: f64) -> CircleFn {
    let mut acc = CircleFn::one();
    if n > 0 {
        for j in 1..=n {
            acc = acc.mul(&f.rotated(j as f64 * theta));
        }
    } else {
        let fc = f.conj();
        for j in 0..-n {
            acc = acc.mul(&fc.rotated(-(j as f64) * theta));
        }
    }
    acc
}

/// `β_f(Σ Xₙ Vⁿ) = Σ Xₙ Zₙ Vⁿ`.
pub fn stabilizer_action(f: &CircleFn, x: &GradedElement) -> Result<GradedElement> {
    f.check_unimodular()?;
    x.weight(|n| Ok(cocycle(f, n, x.theta)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilizerReport {
    /// `β` fixes the degree-zero part.
    pub fixes_fixed_point_algebra: bool,
    /// `β ∘ α_ζ = α_ζ ∘ β`.
    pub commutes_with_gauge: bool,
    /// `β(XY) = β(X)β(Y)` and `β(XV) = β(X)β(V)`.
    pub multiplicative: bool,
    /// `Ad β(V) = κ` on the degree-zero part.
    pub implements_kappa: bool,
    pub worst_residual: f64,
    pub all: bool,
}

pub fn check_stabilizer_properties(f: &CircleFn, x: &GradedElement, zeta: Complex64) -> Result<StabilizerReport> {
    let theta = x.theta;
    let beta = |y: &GradedElement| stabilizer_action(f, y);
    let x0 = x.degree_part(0);
    let r1 = beta(&x0)?.distance(&x0);
    let r2 = beta(&gauge_action(zeta, x)?)?.distance(&gauge_action(zeta, &beta(x)?)?);
    let v = GradedElement::v_power(theta, 1);
    let r3 = beta(&x.mul(x)?)?
        .distance(&beta(x)?.mul(&beta(x)?)?)
        .max(beta(&x.mul(&v)?)?.distance(&beta(x)?.mul(&beta(&v)?)?));
    // a degree-zero probe with a nontrivial B-part
    let probe = if x0.degrees().is_empty() {
        let g = GeneratorElement::new(TrigPoly::cos_sin(1, 1.0, 0.0))?;
        GradedElement::from_terms(theta, [(0, Term { circle: CircleFn::monomial(1), letters: vec![BLetter { nu: 0, generator: g }] })])?
    } else {
        x0.clone()
    };
    let ad = beta(&v)?.mul(&probe)?.mul(&beta(&GradedElement::v_power(theta, -1))?)?;
    let kappa_probe = GradedElement {
        theta,
        components: probe.components.iter().map(|(&n, ts)| (n, ts.iter().map(|t| kappa(t, theta)).collect())).collect(),
    };
    let r4 = ad.distance(&kappa_probe);
    let scale = 1.0 + x.components.values().flatten().map(|t| t.circle.series.l1_norm()).fold(0.0, f64::max).powi(2);
    let tol = SYMBOLIC_TOL * scale;
    let worst = r1.max(r2).max(r3).max(r4);
    let (a, b, c_, d) = (r1 <= tol, r2 <= tol, r3 <= tol, r4 <= tol);
    Ok(StabilizerReport {
        fixes_fixed_point_algebra: a,
        commutes_with_gauge: b,
        multiplicative: c_,
        implements_kappa: d,
        worst_residual: worst,
        all: a && b && c_ && d,
    })
}

/// Profile of a locally supported generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    /// `a·ψ′((α − c)/w)` with `ψ(x) = e^{−1/(1−x²)}`: smooth, zero mean,
    /// supported in `[c − w, c + w]`.
    Bump { center: f64, width: f64, amplitude: f64 },
    Trig(TrigPoly),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalGenerator {
    pub profile: Profile,
    #[serde(default)]
    pub support: Option<Arc>,
}

fn bump(x: f64) -> (f64, f64, f64) {
    if x.abs() >= 1.0 {
        return (0.0, 0.0, 0.0);
    }
    let q = 1.0 - x * x;
    let psi = (-1.0 / q).exp();
    (psi, psi * (-2.0 * x / (q * q)), psi * (6.0 * x.powi(4) - 2.0) / q.powi(4))
}

fn wrap(alpha: f64) -> f64 {
    (alpha + PI).rem_euclid(TAU) - PI
}

impl LocalGenerator {
    pub fn bump(center: f64, width: f64, amplitude: f64) -> Result<Self> {
        if !(width > 0.0 && width < PI) {
            return Err(LabError::InvalidArgument(format!("bump width {width} outside (0, π)")));
        }
        Ok(Self { profile: Profile::Bump { center, width, amplitude }, support: Some(Arc::new(center - width, center + width)?) })
    }

    pub fn eval(&self, alpha: f64) -> f64 {
        match &self.profile {
            Profile::Bump { center, width, amplitude } => amplitude * bump(wrap(alpha - center) / width).1,
            Profile::Trig(p) => p.eval(alpha),
        }
    }

    pub fn derivative(&self, alpha: f64) -> f64 {
        match &self.profile {
            Profile::Bump { center, width, amplitude } => amplitude * bump(wrap(alpha - center) / width).2 / width,
            Profile::Trig(p) => p.eval_derivative(alpha),
        }
    }

    /// The declared support, checked against samples of the profile.
    pub fn checked_support(&self) -> Result<Arc> {
        let arc = self.support.ok_or(LabError::SupportUndeclared)?;
        for j in 0..LOCALITY_POINTS {
            let alpha = TAU * j as f64 / LOCALITY_POINTS as f64;
            if !arc.contains_angle(alpha) && self.eval(alpha).abs() > 1e-12 {
                return Err(LabError::InvalidArgument(format!("profile nonzero at {alpha} outside the declared support")));
            }
        }
        Ok(arc)
    }
}

/// Grid for the locality quadrature.
pub const LOCALITY_POINTS: usize = 8192;

/// `(1/2π) ∫ A B′ dα` on the locality grid.
pub fn local_symplectic(a: &LocalGenerator, b: &LocalGenerator) -> f64 {
    (0..LOCALITY_POINTS)
        .map(|j| {
            let alpha = TAU * j as f64 / LOCALITY_POINTS as f64;
            a.eval(alpha) * b.derivative(alpha)
        })
        .sum::<f64>()
        / LOCALITY_POINTS as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalityReport {
    pub disjoint: bool,
    /// First support inside the second.
    pub nested: bool,
    pub s: f64,
    /// `W(A₁)W(A₂) = e^{is} W(A₂)W(A₁)`.
    pub commutation_phase: Complex64,
    pub commute: bool,
    /// Disjoint supports imply commuting Weyl elements.
    pub holds: bool,
}

pub fn net_locality(a1: &LocalGenerator, a2: &LocalGenerator) -> Result<LocalityReport> {
    let (d1, d2) = (a1.checked_support()?, a2.checked_support()?);
    let s = match (&a1.profile, &a2.profile) {
        (Profile::Trig(p), Profile::Trig(q)) => symplectic_quadrature(p, q, crate::mode_space::QUADRATURE_POINTS),
        _ => local_symplectic(a1, a2),
    };
    let disjoint = d1.disjoint(&d2);
    let commute = s.abs() <= 1e-10;
    Ok(LocalityReport {
        disjoint,
        nested: d1.is_within(&d2),
        s,
        commutation_phase: cis(s),
        commute,
        holds: !disjoint || commute,
    })
}

/// Checks `β_f ∘ β_g = β_{fg}` on `x`.
pub fn homomorphism_residual(f: &CircleFn, g: &CircleFn, x: &GradedElement) -> Result<f64> {
    let lhs = stabilizer_action(f, &stabilizer_action(g, x)?)?;
    let rhs = stabilizer_action(&f.mul(g), x)?;
    Ok(lhs.distance(&rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;
    use crate::sampling;
    use proptest::prelude::*;
    use rand::Rng;

    fn gen(k: u32, a: f64, b: f64) -> GeneratorElement {
        GeneratorElement::new(TrigPoly::cos_sin(k, a, b)).unwrap()
    }

    fn random_element(rng: &mut impl Rng, theta: f64) -> GradedElement {
        let terms = (0..3).map(|_| {
            let n = rng.random_range(-2..=2);
            let circle = CircleFn::new(Fourier::from_pairs((-2..=2).map(|k| (k, c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))))));
            let letters = if rng.random_bool(0.5) {
                vec![BLetter { nu: rng.random_range(-1..=1), generator: GeneratorElement::new(sampling::trig_poly(rng, 2, 0.5)).unwrap() }]
            } else {
                Vec::new()
            };
            (n, Term { circle, letters })
        });
        GradedElement::from_terms(theta, terms.collect::<Vec<_>>()).unwrap()
    }

    fn random_phase(rng: &mut impl Rng) -> CircleFn {
        CircleFn::from_loop(&sampling::loop_function(rng, -2..=2, 2, 0.4))
    }

    #[test]
    fn kappa_examples() {
        let t = Term { circle: CircleFn::one(), letters: vec![BLetter { nu: 0, generator: gen(1, 1.0, 0.0) }] };
        let k = kappa(&t, 0.7);
        assert_eq!(k.circle.series(), &Fourier::constant(ONE));
        assert_eq!(k.letters[0].nu, 1);
        let f = Term::scalar(CircleFn::monomial(1));
        let k = kappa(&f, PI);
        assert!(k.circle.series().distance(&Fourier::monomial(1, c(-1.0, 0.0))) < 1e-15);
        let m = 6;
        let back = kappa_power(&Term::scalar(CircleFn::monomial(3)), TAU / m as f64, m);
        assert!(back.circle.series().distance(&Fourier::monomial(3, ONE)) < 1e-14);
    }

    #[test]
    fn trivial_function_acts_trivially() {
        let mut rng = sampling::rng(1);
        let x = random_element(&mut rng, 0.9);
        assert!(stabilizer_action(&CircleFn::one(), &x).unwrap().distance(&x) < 1e-15);
    }

    #[test]
    fn beta_of_v() {
        let theta = 0.8;
        let f = CircleFn::monomial(1);
        let bv = stabilizer_action(&f, &GradedElement::v_power(theta, 1)).unwrap();
        let want = GradedElement::monomial(theta, 1, f.rotated(theta));
        assert!(bv.distance(&want) < 1e-15);
        // β(V^n)V^{-n} is the cocycle, and β(V^{-1}) inverts β(V)
        let b3 = stabilizer_action(&f, &GradedElement::v_power(theta, 3)).unwrap();
        assert!(b3.distance(&GradedElement::monomial(theta, 3, cocycle(&f, 3, theta))) < 1e-14);
        let binv = stabilizer_action(&f, &GradedElement::v_power(theta, -1)).unwrap();
        assert!(bv.mul(&binv).unwrap().distance(&GradedElement::v_power(theta, 0)) < 1e-14);
    }

    #[test]
    fn rejects_non_unimodular() {
        let f = CircleFn::new(Fourier::constant(c(2.0, 0.0)));
        assert!(matches!(stabilizer_action(&f, &GradedElement::v_power(0.1, 1)), Err(LabError::NotUnimodular { .. })));
    }

    #[test]
    fn properties_for_identity_loop_on_v() {
        let r = check_stabilizer_properties(&CircleFn::monomial(1), &GradedElement::v_power(0.5, 1), c(0.0, 1.0)).unwrap();
        assert!(r.all, "{r:?}");
    }

    #[test]
    fn inverse_function_undoes_action() {
        let mut rng = sampling::rng(2);
        let g = random_phase(&mut rng);
        let x = random_element(&mut rng, 0.3);
        let back = stabilizer_action(&g.conj(), &stabilizer_action(&g, &x).unwrap()).unwrap();
        assert!(back.distance(&x) < 1e-11);
    }

    #[test]
    fn weyl_letters_merge_under_same_nu() {
        let a = gen(1, 2.0, 0.0);
        let b = gen(1, 0.0, 2.0);
        let t = Term { circle: CircleFn::one(), letters: vec![BLetter { nu: 0, generator: a.clone() }, BLetter { nu: 0, generator: b.clone() }] }
            .canonical()
            .unwrap();
        assert_eq!(t.letters.len(), 1);
        assert!((t.circle.series().get(0) - cis(1.0)).norm() < 1e-12);
        let kept = Term { circle: CircleFn::one(), letters: vec![BLetter { nu: 0, generator: a }, BLetter { nu: 1, generator: b }] }
            .canonical()
            .unwrap();
        assert_eq!(kept.letters.len(), 2);
    }

    #[test]
    fn bump_derivative_matches_finite_difference() {
        let g = LocalGenerator::bump(1.0, 0.6, 1.3).unwrap();
        for alpha in [0.5, 0.8, 1.1, 1.45] {
            let h = 1e-6;
            let fd = (g.eval(alpha + h) - g.eval(alpha - h)) / (2.0 * h);
            assert!((fd - g.derivative(alpha)).abs() < 1e-5);
        }
    }

    #[test]
    fn locality_examples() {
        let q = PI / 4.0;
        let a = LocalGenerator::bump(q, q, 1.0).unwrap();
        let b = LocalGenerator::bump(5.0 * q, q, 1.0).unwrap();
        let r = net_locality(&a, &b).unwrap();
        assert!(r.disjoint && r.commute && r.holds && r.s == 0.0);
        let inner = LocalGenerator::bump(q, q / 2.0, 1.0).unwrap();
        assert!(net_locality(&inner, &a).unwrap().nested);
        let near = LocalGenerator::bump(q + 0.3, q, 1.0).unwrap();
        let r = net_locality(&a, &near).unwrap();
        assert!(!r.disjoint && r.s.abs() > 1e-3);
        let undeclared = LocalGenerator { profile: Profile::Trig(TrigPoly::cos_sin(1, 1.0, 0.0)), support: None };
        assert!(matches!(net_locality(&undeclared, &a), Err(LabError::SupportUndeclared)));
        let wrong = LocalGenerator { profile: Profile::Trig(TrigPoly::cos_sin(1, 1.0, 0.0)), support: Some(Arc::new(0.0, 1.0).unwrap()) };
        assert!(net_locality(&wrong, &a).is_err());
    }

    #[test]
    fn antisymmetric_local_form() {
        let a = LocalGenerator::bump(1.0, 0.5, 1.0).unwrap();
        let b = LocalGenerator::bump(1.4, 0.7, -0.6).unwrap();
        assert!((local_symplectic(&a, &b) + local_symplectic(&b, &a)).abs() < 1e-12);
    }

    #[test]
    fn arcs() {
        let a = Arc::new(0.0, 1.0).unwrap();
        assert!(a.disjoint(&Arc::new(2.0, 3.0).unwrap()));
        assert!(!a.disjoint(&Arc::new(0.5, 3.0).unwrap()));
        // wraps through 2π
        assert!(!a.disjoint(&Arc::new(6.0, 6.5).unwrap()));
        assert!(Arc::new(6.4, 6.6).unwrap().is_within(&Arc::new(0.0, 1.0).unwrap()));
        assert!(Arc::new(0.0, 7.0).is_err());
    }

    #[test]
    fn element_serde_round_trip() {
        let mut rng = sampling::rng(8);
        let x = random_element(&mut rng, 0.25);
        let s = serde_json::to_string(&x).unwrap();
        let back: GradedElement = serde_json::from_str(&s).unwrap();
        assert!(back.distance(&x) < 1e-15);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(20))]

        #[test]
        fn stabilizer_properties_hold(seed in any::<u64>()) {
            let mut rng = sampling::rng(seed);
            let theta = rng.random_range(0.0..TAU);
            let f = random_phase(&mut rng);
            let g = random_phase(&mut rng);
            let x = random_element(&mut rng, theta);
            let zeta = sampling::unit_complex(&mut rng);
            let r = check_stabilizer_properties(&f, &x, zeta).unwrap();
            prop_assert!(r.all, "{:?}", r);
            prop_assert!(homomorphism_residual(&f, &g, &x).unwrap() < 1e-10);
        }

        #[test]
        fn gauge_action_is_multiplicative(seed in any::<u64>()) {
            let mut rng = sampling::rng(seed);
            let theta = rng.random_range(0.0..TAU);
            let x = random_element(&mut rng, theta);
            let y = random_element(&mut rng, theta);
            let zeta = sampling::unit_complex(&mut rng);
            let lhs = gauge_action(zeta, &x.mul(&y).unwrap()).unwrap();
            let rhs = gauge_action(zeta, &x).unwrap().mul(&gauge_action(zeta, &y).unwrap()).unwrap();
            prop_assert!(lhs.distance(&rhs) < 1e-12);
            let xy = x.mul(&y).unwrap();
            for n in xy.degrees() {
                prop_assert!(x.degrees().iter().any(|a| y.degrees().iter().any(|b| a + b == n)));
            }
        }
    }
}
