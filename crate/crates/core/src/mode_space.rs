//! One-particle layer: the windowed mode space `span{e_n : |n| ≤ n_max}`,
//! multiplication (Toeplitz) operators of loops and real trig polynomials,
//! half-line projections, and the pairing `tr(P A P⊥ B P)` with its
//! symplectic part.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::config::Tolerances;
use crate::error::{LabError, Result};
use crate::fourier::{CoeffList, CoeffTriple, Fourier};
use crate::linalg::{c, frobenius, max_abs_diff, CMat, CVec, ONE, ZERO};
use num_complex::Complex64;

/// Number of quadrature nodes for the symplectic-form oracle.
pub const QUADRATURE_POINTS: usize = 512;
/// Number of samples for the argument lift.
pub const LIFT_POINTS: usize = 1024;
/// Coefficient tolerance when expanding `e^{ih}`.
pub const EXP_TOLERANCE: f64 = 1e-14;

/// Symmetric mode window `[-n_max, n_max]`, stored at index `n + n_max`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct ModeWindow {
    n_max: usize,
}

impl TryFrom<usize> for ModeWindow {
    type Error = LabError;
    fn try_from(n_max: usize) -> Result<Self> {
        Self::new(n_max)
    }
}

impl From<ModeWindow> for usize {
    fn from(w: ModeWindow) -> usize {
        w.n_max
    }
}

impl ModeWindow {
    pub fn new(n_max: usize) -> Result<Self> {
        if n_max == 0 {
            return Err(LabError::InvalidArgument("n_max must be at least 1".into()));
        }
        Ok(Self { n_max })
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn dim(&self) -> usize {
        2 * self.n_max + 1
    }

    pub fn contains(&self, mode: i64) -> bool {
        mode.unsigned_abs() as usize <= self.n_max
    }

    pub fn index(&self, mode: i64) -> Option<usize> {
        self.contains(mode).then(|| (mode + self.n_max as i64) as usize)
    }

    pub fn mode(&self, index: usize) -> i64 {
        index as i64 - self.n_max as i64
    }

    pub fn modes(&self) -> impl Iterator<Item = i64> {
        let n = self.n_max as i64;
        -n..=n
    }

    pub fn enlarged(&self, by: usize) -> Self {
        Self { n_max: self.n_max + by }
    }

    /// Basis vector `e_n`.
    pub fn basis_vector(&self, mode: i64) -> Result<CVec> {
        let i = self.index(mode).ok_or(LabError::InsufficientWindow {
            required: mode.unsigned_abs() as usize,
            actual: self.n_max,
        })?;
        let mut v = CVec::zeros(self.dim());
        v[i] = ONE;
        Ok(v)
    }
}

/// Real-valued trig polynomial `A(α) = Σ_k A_k e^{ikα}`, `A_{-k} = conj(A_k)`.
///
/// JSON form `{"coeffs": [[k, re, im], ...]}`; a coefficient given for only
/// one of `±k` gets its conjugate partner filled in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CoeffList", into = "CoeffList")]
pub struct TrigPoly {
    series: Fourier,
}

impl TryFrom<CoeffList> for TrigPoly {
    type Error = LabError;
    fn try_from(list: CoeffList) -> Result<Self> {
        Self::from_triples(&list.coeffs)
    }
}

impl From<TrigPoly> for CoeffList {
    fn from(p: TrigPoly) -> Self {
        CoeffList { coeffs: p.series.to_triples() }
    }
}

impl TrigPoly {
    pub fn zero() -> Self {
        Self { series: Fourier::zero() }
    }

    pub fn constant(value: f64) -> Self {
        Self { series: Fourier::constant(c(value, 0.0)) }
    }

    /// `a·cos(kα) + b·sin(kα)`.
    pub fn cos_sin(k: u32, a: f64, b: f64) -> Self {
        let k = k as i64;
        if k == 0 {
            return Self::constant(a);
        }
        let ck = c(a / 2.0, -b / 2.0);
        Self { series: Fourier::from_pairs([(k, ck), (-k, ck.conj())]) }
    }

    pub fn from_series(series: Fourier) -> Result<Self> {
        let defect = series.reality_defect();
        if defect > 1e-12 {
            return Err(LabError::SymmetryViolation { what: "reality of trig polynomial", residual: defect });
        }
        // make the reality exact
        Ok(Self { series: series.add(&series.conj()).scale(c(0.5, 0.0)) })
    }

    pub fn from_triples(triples: &[CoeffTriple]) -> Result<Self> {
        let given = Fourier::from_triples(triples);
        let mut pairs = Vec::new();
        for &(k, re, im) in triples {
            pairs.push((k, c(re, im)));
            if k != 0 && !triples.iter().any(|t| t.0 == -k) {
                pairs.push((-k, c(re, -im)));
            }
        }
        if given.get(0).im.abs() > 1e-12 {
            return Err(LabError::SymmetryViolation { what: "real constant term", residual: given.get(0).im.abs() });
        }
        Self::from_series(Fourier::from_pairs(pairs))
    }

    pub fn series(&self) -> &Fourier {
        &self.series
    }

    pub fn coeff(&self, k: i64) -> Complex64 {
        self.series.get(k)
    }

    pub fn band(&self) -> usize {
        self.series.effective_band(0.0)
    }

    pub fn mean(&self) -> f64 {
        self.series.get(0).re
    }

    pub fn eval(&self, alpha: f64) -> f64 {
        self.series.eval(alpha).re
    }

    pub fn eval_derivative(&self, alpha: f64) -> f64 {
        self.series.eval_derivative(alpha).re
    }

    pub fn add(&self, other: &Self) -> Self {
        Self { series: self.series.add(&other.series) }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { series: self.series.scale(c(s, 0.0)) }
    }

    pub fn without_mean(&self) -> Self {
        Self { series: self.series.sub(&Fourier::constant(c(self.mean(), 0.0))) }
    }

    /// `Σ_{k≥1} k |A_k|²`.
    pub fn weighted_norm_sq(&self) -> f64 {
        (1..=self.band() as i64).map(|k| k as f64 * self.coeff(k).norm_sqr()).sum()
    }

    pub fn operator(&self, window: ModeWindow) -> Result<OneParticleOperator> {
        OneParticleOperator::toeplitz(window, &self.series)
    }
}

/// A circle-valued loop `f(e^{iα}) = e^{iwα}·e^{ih(α)}` with real `h`.
///
/// JSON form `{"winding": w, "h": [[k, re, im], ...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LoopSpec", into = "LoopSpec")]
pub struct LoopFunction {
    winding: i64,
    phase: TrigPoly,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LoopSpec {
    winding: i64,
    #[serde(default)]
    h: Vec<CoeffTriple>,
}

impl TryFrom<LoopSpec> for LoopFunction {
    type Error = LabError;
    fn try_from(s: LoopSpec) -> Result<Self> {
        Ok(Self { winding: s.winding, phase: TrigPoly::from_triples(&s.h)? })
    }
}

impl From<LoopFunction> for LoopSpec {
    fn from(f: LoopFunction) -> Self {
        LoopSpec { winding: f.winding, h: f.phase.series.to_triples() }
    }
}

impl LoopFunction {
    pub fn new(winding: i64, phase: TrigPoly) -> Self {
        Self { winding, phase }
    }

    /// `ζ ↦ ζ^w`.
    pub fn monomial(winding: i64) -> Self {
        Self { winding, phase: TrigPoly::zero() }
    }

    pub fn one() -> Self {
        Self::monomial(0)
    }

    pub fn stored_winding(&self) -> i64 {
        self.winding
    }

    pub fn phase(&self) -> &TrigPoly {
        &self.phase
    }

    /// Fourier coefficients of the full loop, `e^{ih}` expanded to
    /// [`EXP_TOLERANCE`] and shifted by the winding.
    pub fn coefficients(&self) -> Fourier {
        self.phase.series.exp_i(EXP_TOLERANCE).trimmed(EXP_TOLERANCE).shift(self.winding)
    }

    /// Bandwidth of the full loop after the expansion.
    pub fn total_band(&self) -> usize {
        self.coefficients().effective_band(0.0)
    }

    pub fn eval(&self, alpha: f64) -> Complex64 {
        crate::linalg::cis(self.winding as f64 * alpha + self.phase.eval(alpha))
    }

    pub fn mul(&self, other: &Self) -> Self {
        Self { winding: self.winding + other.winding, phase: self.phase.add(&other.phase) }
    }

    /// Pointwise conjugate, i.e. the inverse loop.
    pub fn inverse(&self) -> Self {
        Self { winding: -self.winding, phase: self.phase.scale(-1.0) }
    }

    /// Largest deviation of `|f|` from 1 on the lift grid, using the
    /// truncated coefficients.
    pub fn unimodularity_defect(&self) -> f64 {
        self.coefficients()
            .sample(LIFT_POINTS)
            .iter()
            .map(|z| (z.norm() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    pub fn operator(&self, window: ModeWindow) -> Result<OneParticleOperator> {
        multiplication_operator(self, window)
    }
}

/// A complex matrix on a mode window.
///
/// `margin` records how far the truncation reaches inward: rows and columns
/// with `|n| ≤ n_max - margin` agree with the infinite operator.
#[derive(Debug, Clone, PartialEq)]
pub struct OneParticleOperator {
    window: ModeWindow,
    matrix: CMat,
    band: usize,
    margin: usize,
}

fn structural_band(m: &CMat) -> usize {
    let mut band = 0;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            if m[(i, j)] != ZERO {
                band = band.max(i.abs_diff(j));
            }
        }
    }
    band
}

impl OneParticleOperator {
    /// Wraps a matrix that is exact on the whole window.
    pub fn from_matrix(window: ModeWindow, matrix: CMat) -> Result<Self> {
        if matrix.shape() != (window.dim(), window.dim()) {
            return Err(LabError::InvalidArgument(format!(
                "matrix shape {:?} does not match window dimension {}",
                matrix.shape(),
                window.dim()
            )));
        }
        let band = structural_band(&matrix);
        Ok(Self { window, matrix, band, margin: 0 })
    }

    pub fn identity(window: ModeWindow) -> Self {
        Self::diagonal(window, |_| ONE)
    }

    pub fn diagonal(window: ModeWindow, entry: impl Fn(i64) -> Complex64) -> Self {
        let d = CVec::from_iterator(window.dim(), window.modes().map(entry));
        Self { window, matrix: CMat::from_diagonal(&d), band: 0, margin: 0 }
    }

    /// Windowed Toeplitz matrix with `entry(m, n) = f_{m-n}`.
    pub fn toeplitz(window: ModeWindow, symbol: &Fourier) -> Result<Self> {
        let b = symbol.effective_band(0.0);
        if b > window.n_max() {
            return Err(LabError::InsufficientWindow { required: b, actual: window.n_max() });
        }
        let dim = window.dim();
        let matrix = CMat::from_fn(dim, dim, |i, j| symbol.get(i as i64 - j as i64));
        Ok(Self { window, matrix, band: b, margin: b })
    }

    pub fn window(&self) -> ModeWindow {
        self.window
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn entry(&self, m: i64, n: i64) -> Complex64 {
        match (self.window.index(m), self.window.index(n)) {
            (Some(i), Some(j)) => self.matrix[(i, j)],
            _ => ZERO,
        }
    }

    /// Structural bandwidth; `None` when the matrix is dense.
    pub fn bandwidth(&self) -> Option<usize> {
        (self.band < 2 * self.window.n_max()).then_some(self.band)
    }

    pub fn band(&self) -> usize {
        self.band
    }

    pub fn margin(&self) -> usize {
        self.margin
    }

    /// Modes `|n|` up to this radius carry complete, exact rows and columns.
    pub fn exact_radius(&self) -> Option<usize> {
        self.window.n_max().checked_sub(self.margin.max(self.band))
    }

    fn same_window(&self, other: &Self) -> Result<()> {
        if self.window != other.window {
            return Err(LabError::InvalidArgument(format!(
                "window mismatch: {} vs {}",
                self.window.n_max(),
                other.window.n_max()
            )));
        }
        Ok(())
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.same_window(other)?;
        let matrix = &self.matrix * &other.matrix;
        let band = structural_band(&matrix);
        let margin = other.margin.max(self.margin + other.band).max(self.margin.max(other.margin + self.band));
        Ok(Self { window: self.window, matrix, band, margin })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_window(other)?;
        let matrix = &self.matrix + &other.matrix;
        Ok(Self { window: self.window, band: structural_band(&matrix), matrix, margin: self.margin.max(other.margin) })
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self { matrix: &self.matrix * s, ..self.clone() }
    }

    pub fn adjoint(&self) -> Self {
        Self { matrix: self.matrix.adjoint(), ..self.clone() }
    }

    /// `max |(U U* - 1)_{mn}|` and the same for `U* U`, over the exact radius.
    pub fn interior_unitarity_residual(&self) -> Result<f64> {
        let r = self.exact_radius().ok_or(LabError::InsufficientWindow {
            required: self.margin.max(self.band),
            actual: self.window.n_max(),
        })?;
        let lo = self.window.n_max() - r;
        let len = 2 * r + 1;
        let uu = &self.matrix * self.matrix.adjoint();
        let uu2 = self.matrix.adjoint() * &self.matrix;
        let id = CMat::identity(len, len);
        let a = max_abs_diff(&uu.view((lo, lo), (len, len)).into_owned(), &id);
        let b = max_abs_diff(&uu2.view((lo, lo), (len, len)).into_owned(), &id);
        Ok(a.max(b))
    }

    pub fn check_unitary(&self, tol: f64) -> Result<()> {
        let residual = self.interior_unitarity_residual()?;
        if residual > tol {
            return Err(LabError::NotUnitary { residual });
        }
        Ok(())
    }

    pub fn hermiticity_residual(&self) -> f64 {
        max_abs_diff(&self.matrix, &self.matrix.adjoint())
    }

    /// `max |γAγ - A|` entrywise.
    pub fn conjugation_residual(&self) -> f64 {
        max_abs_diff(&Conjugation1P.conjugate(self).matrix, &self.matrix)
    }

    pub fn projection_residual(&self) -> f64 {
        let sq = &self.matrix * &self.matrix;
        max_abs_diff(&sq, &self.matrix).max(self.hermiticity_residual())
    }

    /// Largest entry of `AB - BA`.
    pub fn commutator_residual(&self, other: &Self) -> Result<f64> {
        self.same_window(other)?;
        Ok(max_abs_diff(&(&self.matrix * &other.matrix), &(&other.matrix * &self.matrix)))
    }

    /// The Toeplitz symbol read off the exact interior, if the diagonals are
    /// constant there.
    pub fn toeplitz_symbol(&self) -> Option<Fourier> {
        let r = self.exact_radius()? as i64;
        let b = self.band as i64;
        if b > r {
            return None;
        }
        let symbol = Fourier::from_pairs((-b..=b).map(|k| (k, self.entry(k, 0))));
        for m in -r..=r {
            for n in -r..=r {
                if (self.entry(m, n) - symbol.get(m - n)).norm() > 1e-12 {
                    return None;
                }
            }
        }
        Some(symbol)
    }

    /// Columnar dump for debugging: one column per mode.
    pub fn export(&self) -> DenseExport {
        let cols = |f: fn(&Complex64) -> f64| {
            self.matrix.column_iter().map(|col| col.iter().map(f).collect()).collect()
        };
        DenseExport {
            n_max: self.window.n_max(),
            modes: self.window.modes().collect(),
            re: cols(|z| z.re),
            im: cols(|z| z.im),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DenseExport {
    pub n_max: usize,
    pub modes: Vec<i64>,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl DenseExport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("row_mode,col_mode,re,im\n");
        for (j, n) in self.modes.iter().enumerate() {
            for (i, m) in self.modes.iter().enumerate() {
                out.push_str(&format!("{m},{n},{:e},{:e}\n", self.re[j][i], self.im[j][i]));
            }
        }
        out
    }
}

/// The conjugation `γ`: complex conjugation composed with `n ↦ -n`, so
/// `γ e_n = e_{-n}`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Conjugation1P;

impl Conjugation1P {
    pub fn apply(&self, v: &CVec) -> CVec {
        let d = v.len();
        CVec::from_fn(d, |i, _| v[d - 1 - i].conj())
    }

    /// `γAγ`, entrywise `conj(A_{-m,-n})`.
    pub fn conjugate(&self, a: &OneParticleOperator) -> OneParticleOperator {
        let d = a.window.dim();
        OneParticleOperator {
            matrix: CMat::from_fn(d, d, |i, j| a.matrix[(d - 1 - i, d - 1 - j)].conj()),
            ..a.clone()
        }
    }

    pub fn conjugate_matrix(&self, a: &CMat) -> CMat {
        let d = a.nrows();
        CMat::from_fn(d, d, |i, j| a[(d - 1 - i, d - 1 - j)].conj())
    }
}

/// Orthoprojection onto `span{e_n : n ≥ start}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HalfSpace {
    pub start: i64,
}

impl Default for HalfSpace {
    fn default() -> Self {
        Self { start: 0 }
    }
}

impl HalfSpace {
    pub fn nonnegative() -> Self {
        Self::default()
    }

    pub fn contains(&self, mode: i64) -> bool {
        mode >= self.start
    }

    pub fn operator(&self, window: ModeWindow) -> OneParticleOperator {
        OneParticleOperator::diagonal(window, |n| if self.contains(n) { ONE } else { ZERO })
    }

    pub fn complement_operator(&self, window: ModeWindow) -> OneParticleOperator {
        OneParticleOperator::diagonal(window, |n| if self.contains(n) { ZERO } else { ONE })
    }
}

/// Something that can be rebuilt as a one-particle operator on any
/// sufficiently large window.
pub trait WindowedOperator {
    fn build(&self, window: ModeWindow) -> Result<OneParticleOperator>;
    /// Like `build`, but loop symbols wider than the window are cut at the
    /// window edge instead of rejected.
    fn build_lenient(&self, window: ModeWindow) -> Result<OneParticleOperator> {
        self.build(window)
    }
    /// Upper bound on the margin of the built operator.
    fn reach(&self) -> usize;
}

impl WindowedOperator for LoopFunction {
    fn build(&self, window: ModeWindow) -> Result<OneParticleOperator> {
        multiplication_operator(self, window)
    }
    fn build_lenient(&self, window: ModeWindow) -> Result<OneParticleOperator> {
        Ok(truncated_multiplication_operator(self, window).0)
    }
    fn reach(&self) -> usize {
        self.total_band()
    }
}

impl WindowedOperator for TrigPoly {
    fn build(&self, window: ModeWindow) -> Result<OneParticleOperator> {
        self.operator(window)
    }
    fn reach(&self) -> usize {
        self.band()
    }
}

/// Unitary one-particle operators assembled from loops, scalars and the
/// regular representation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnitaryExpr {
    Loop(LoopFunction),
    /// `λ·1` given as `[re, im]`.
    Scalar(f64, f64),
    /// `U_ζ` given as `[re, im]`.
    Regular(f64, f64),
    Product(Vec<UnitaryExpr>),
    Adjoint(Box<UnitaryExpr>),
}

impl UnitaryExpr {
    fn assemble(&self, window: ModeWindow, lenient: bool) -> Result<OneParticleOperator> {
        match self {
            Self::Loop(f) if lenient => Ok(truncated_multiplication_operator(f, window).0),
            Self::Loop(f) => multiplication_operator(f, window),
            Self::Scalar(re, im) => {
                let lambda = unimodular(c(*re, *im))?;
                Ok(OneParticleOperator::diagonal(window, |_| lambda))
            }
            Self::Regular(re, im) => regular_rep(c(*re, *im), window),
            Self::Product(factors) => {
                let mut acc = OneParticleOperator::identity(window);
                for f in factors {
                    acc = acc.mul(&f.assemble(window, lenient)?)?;
                }
                Ok(acc)
            }
            Self::Adjoint(inner) => Ok(inner.assemble(window, lenient)?.adjoint()),
        }
    }
}

impl WindowedOperator for UnitaryExpr {
    fn build(&self, window: ModeWindow) -> Result<OneParticleOperator> {
        self.assemble(window, false)
    }

    fn build_lenient(&self, window: ModeWindow) -> Result<OneParticleOperator> {
        self.assemble(window, true)
    }

    fn reach(&self) -> usize {
        match self {
            Self::Loop(f) => f.total_band(),
            Self::Scalar(..) | Self::Regular(..) => 0,
            Self::Product(factors) => factors.iter().map(|f| f.reach()).sum(),
            Self::Adjoint(inner) => inner.reach(),
        }
    }
}

fn unimodular(z: Complex64) -> Result<Complex64> {
    if (z.norm() - 1.0).abs() > 1e-12 {
        return Err(LabError::NotUnimodular { modulus: z.norm() });
    }
    Ok(z)
}

pub fn multiplication_operator(f: &LoopFunction, window: ModeWindow) -> Result<OneParticleOperator> {
    OneParticleOperator::toeplitz(window, &f.coefficients())
}

/// Multiplication operator with the symbol cut at `|k| ≤ n_max`; also
/// returns the ℓ¹ mass of the dropped coefficients.
pub fn truncated_multiplication_operator(f: &LoopFunction, window: ModeWindow) -> (OneParticleOperator, f64) {
    let full = f.coefficients();
    let n = window.n_max() as i64;
    let kept = Fourier::from_pairs(full.terms().filter(|(k, _)| k.abs() <= n));
    let dropped = full.l1_norm() - kept.l1_norm();
    let op = OneParticleOperator::toeplitz(window, &kept).expect("symbol fits the window");
    (op, dropped.max(0.0))
}

/// `U_ζ = diag(ζ^n)`.
pub fn regular_rep(zeta: Complex64, window: ModeWindow) -> Result<OneParticleOperator> {
    let zeta = unimodular(zeta)?;
    Ok(OneParticleOperator::diagonal(window, |n| zeta.powi(n as i32)))
}

/// The pairing `tr(P A P⊥ B P)` with `P` the projection onto `n ≥ 0`.
pub fn pairing(a: &OneParticleOperator, b: &OneParticleOperator) -> Result<Complex64> {
    pairing_with(a, b, &Tolerances::default())
}

pub fn pairing_with(a: &OneParticleOperator, b: &OneParticleOperator, tol: &Tolerances) -> Result<Complex64> {
    a.same_window(b)?;
    let n_max = a.window.n_max();
    let (Some(ba), Some(bb)) = (a.bandwidth(), b.bandwidth()) else {
        return Err(LabError::InsufficientWindow { required: 2 * n_max + 1, actual: n_max });
    };
    let required = ba.max(bb) + a.margin.max(b.margin).max(ba.max(bb));
    if required > n_max {
        return Err(LabError::InsufficientWindow { required, actual: n_max });
    }
    for op in [a, b] {
        let r = op.conjugation_residual();
        if r > tol.algebraic {
            return Err(LabError::SymmetryViolation { what: "γAγ = A", residual: r });
        }
    }
    let reach = ba.max(bb) as i64;
    let mut trace = ZERO;
    for m in 0..=reach {
        for n in -reach..0 {
            trace += a.entry(m, n) * b.entry(n, m);
        }
    }
    if let (Some(fa), Some(fb)) = (a.toeplitz_symbol(), b.toeplitz_symbol()) {
        let fourier = fourier_pairing(&fa, &fb);
        let scale = 1.0f64.max(fourier.norm());
        if (fourier - trace).norm() > tol.algebraic * scale {
            return Err(LabError::Consistency { what: "pairing trace vs Fourier", left: trace.im, right: fourier.im });
        }
    }
    Ok(trace)
}

/// `Σ_{k≥1} k·a_k·b_{-k}`.
pub fn fourier_pairing(a: &Fourier, b: &Fourier) -> Complex64 {
    let band = a.band().min(b.band()) as i64;
    (1..=band).map(|k| a.get(k) * b.get(-k) * k as f64).sum()
}

/// The three computations of the symplectic form `s(A, B)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchwingerRoutes {
    /// `2·Im tr(P A P⊥ B P)`.
    pub trace: f64,
    /// `(1/2π) ∫ A B' dα` on the uniform grid.
    pub quadrature: f64,
    /// `2·Im Σ_{k≥1} k A_k B_{-k}`.
    pub fourier: f64,
}

impl SchwingerRoutes {
    pub fn spread(&self) -> f64 {
        let v = [self.trace, self.quadrature, self.fourier];
        let hi = v.iter().copied().fold(f64::MIN, f64::max);
        let lo = v.iter().copied().fold(f64::MAX, f64::min);
        hi - lo
    }
}

/// `(1/N) Σ_j A(α_j) B'(α_j)` on `n` equispaced nodes.
pub fn symplectic_quadrature(a: &TrigPoly, b: &TrigPoly, n: usize) -> f64 {
    (0..n)
        .map(|j| {
            let alpha = 2.0 * PI * j as f64 / n as f64;
            a.eval(alpha) * b.eval_derivative(alpha)
        })
        .sum::<f64>()
        / n as f64
}

pub fn schwinger_routes(a: &OneParticleOperator, b: &OneParticleOperator) -> Result<SchwingerRoutes> {
    let trace = 2.0 * pairing(a, b)?.im;
    let (Some(fa), Some(fb)) = (a.toeplitz_symbol(), b.toeplitz_symbol()) else {
        return Err(LabError::NotToeplitz);
    };
    let (pa, pb) = (TrigPoly::from_series(fa)?, TrigPoly::from_series(fb)?);
    if 2 * (pa.band() + pb.band()) >= QUADRATURE_POINTS {
        return Err(LabError::InvalidArgument("bandwidth not resolved by the quadrature grid".into()));
    }
    let quadrature = symplectic_quadrature(&pa, &pb, QUADRATURE_POINTS);
    let fourier = 2.0 * fourier_pairing(pa.series(), pb.series()).im;
    Ok(SchwingerRoutes { trace, quadrature, fourier })
}

/// `s(A, B) = 2·Im tr(P A P⊥ B P)`, cross-checked against quadrature and
/// the Fourier sum.
pub fn schwinger_form(a: &OneParticleOperator, b: &OneParticleOperator) -> Result<f64> {
    schwinger_form_with(a, b, &Tolerances::default())
}

pub fn schwinger_form_with(a: &OneParticleOperator, b: &OneParticleOperator, tol: &Tolerances) -> Result<f64> {
    let routes = schwinger_routes(a, b)?;
    if routes.spread() > tol.quadrature {
        return Err(LabError::Consistency { what: "symplectic form routes", left: routes.trace, right: routes.quadrature });
    }
    Ok(routes.trace)
}

/// Convenience: `s(A, B)` for trig polynomials on the smallest safe window.
pub fn schwinger_of(a: &TrigPoly, b: &TrigPoly) -> Result<f64> {
    let w = ModeWindow::new(2 * a.band().max(b.band()).max(1))?;
    schwinger_form(&a.operator(w)?, &b.operator(w)?)
}

/// Convenience: `⟨A, B⟩` for trig polynomials on the smallest safe window.
pub fn pairing_of(a: &TrigPoly, b: &TrigPoly) -> Result<Complex64> {
    let w = ModeWindow::new(2 * a.band().max(b.band()).max(1))?;
    pairing(&a.operator(w)?, &b.operator(w)?)
}

/// Winding number of a sampled closed curve by continuous argument lift.
pub fn winding_from_samples(samples: &[Complex64]) -> Result<i64> {
    for (index, z) in samples.iter().enumerate() {
        if z.norm() < 0.5 {
            return Err(LabError::LiftFailed { index, modulus: z.norm() });
        }
    }
    let n = samples.len();
    let total: f64 = (0..n).map(|j| (samples[(j + 1) % n] / samples[j]).arg()).sum();
    let turns = total / (2.0 * PI);
    let rounded = turns.round();
    if (turns - rounded).abs() > 1e-6 {
        return Err(LabError::Consistency { what: "argument lift closes", left: turns, right: rounded });
    }
    Ok(rounded as i64)
}

pub fn winding_number(f: &LoopFunction) -> Result<i64> {
    let defect = f.unimodularity_defect();
    if defect > 1e-10 {
        return Err(LabError::NotUnimodular { modulus: 1.0 + defect });
    }
    let lifted = winding_from_samples(&f.coefficients().sample(LIFT_POINTS))?;
    if lifted != f.winding {
        return Err(LabError::Consistency {
            what: "stored vs lifted winding",
            left: f.winding as f64,
            right: lifted as f64,
        });
    }
    Ok(lifted)
}

/// `(‖P U P⊥‖₂, ‖P⊥ U P‖₂)` on the window.
pub fn offdiag_norms_at(u: &OneParticleOperator, p: &OneParticleOperator) -> Result<(f64, f64)> {
    u.same_window(p)?;
    let residual = p.projection_residual();
    if residual > 1e-12 {
        return Err(LabError::NotProjection { residual });
    }
    let d = p.window.dim();
    let q = CMat::identity(d, d) - &p.matrix;
    let upper = frobenius(&(&p.matrix * &u.matrix * &q));
    let lower = frobenius(&(&q * &u.matrix * &p.matrix));
    Ok((upper, lower))
}

/// Off-diagonal Hilbert–Schmidt norms with a convergence probe.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HsNorms {
    /// `‖P U P⊥‖₂`.
    pub p_u_pperp: f64,
    /// `‖P⊥ U P‖₂`.
    pub pperp_u_p: f64,
    pub window: usize,
    /// Both norms moved by less than the stability tolerance at `n_max + 4`.
    pub converged: bool,
}

pub fn hs_offdiag_norms<T: WindowedOperator + ?Sized>(u: &T, p: HalfSpace, window: ModeWindow) -> Result<HsNorms> {
    let at = |w: ModeWindow| offdiag_norms_at(&u.build_lenient(w)?, &p.operator(w));
    let (a, b) = at(window)?;
    let (a2, b2) = at(window.enlarged(4))?;
    let tol = Tolerances::default().window_stability;
    Ok(HsNorms {
        p_u_pperp: a,
        pperp_u_p: b,
        window: window.n_max(),
        converged: (a - a2).abs() < tol && (b - b2).abs() < tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{cis, I};

    fn w(n: usize) -> ModeWindow {
        ModeWindow::new(n).unwrap()
    }

    #[test]
    fn window_indexing_is_a_bijection() {
        let win = w(3);
        let back: Vec<i64> = (0..win.dim()).map(|i| win.mode(i)).collect();
        assert_eq!(back, win.modes().collect::<Vec<_>>());
        assert!(ModeWindow::new(0).is_err());
        assert_eq!(win.index(4), None);
    }

    #[test]
    fn shift_and_identity_loops() {
        let v = multiplication_operator(&LoopFunction::monomial(1), w(4)).unwrap();
        for m in -4..=4 {
            for n in -4..=4 {
                let want = if m == n + 1 { ONE } else { ZERO };
                assert_eq!(v.entry(m, n), want);
            }
        }
        let one = multiplication_operator(&LoopFunction::one(), w(4)).unwrap();
        assert_eq!(one.matrix(), &CMat::identity(9, 9));
    }

    #[test]
    fn loop_coefficients_match_fft_oracle() {
        let f = LoopFunction::new(0, TrigPoly::cos_sin(1, 0.4, 0.0));
        let u = multiplication_operator(&f, w(12)).unwrap();
        let samples: Vec<Complex64> = (0..256)
            .map(|j| cis(0.4 * (2.0 * PI * j as f64 / 256.0).cos()))
            .collect();
        let oracle = Fourier::from_samples(&samples, 24).unwrap();
        for m in -12..=12i64 {
            for n in -12..=12i64 {
                assert!((u.entry(m, n) - oracle.get(m - n)).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn insufficient_window_reports_requirement() {
        let f = LoopFunction::monomial(5);
        match multiplication_operator(&f, w(3)) {
            Err(LabError::InsufficientWindow { required, actual }) => {
                assert_eq!((required, actual), (5, 3));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn regular_rep_parity_and_rejection() {
        let u = regular_rep(c(-1.0, 0.0), w(1)).unwrap();
        let d: Vec<Complex64> = u.matrix().diagonal().iter().copied().collect();
        assert_eq!(d, vec![c(-1.0, 0.0), ONE, c(-1.0, 0.0)]);
        assert!(matches!(regular_rep(c(1.1, 0.0), w(1)), Err(LabError::NotUnimodular { .. })));
    }

    #[test]
    fn regular_rep_scales_the_shift() {
        let win = w(8);
        let zeta = cis(2.0 * PI / 7.0);
        let u = regular_rep(zeta, win).unwrap();
        let v = multiplication_operator(&LoopFunction::monomial(1), win).unwrap();
        let lhs = u.mul(&v).unwrap().mul(&u.adjoint()).unwrap();
        assert!(max_abs_diff(lhs.matrix(), &(v.matrix() * zeta)) < 1e-12);
    }

    #[test]
    fn pairing_examples() {
        let win = w(6);
        let cos1 = TrigPoly::cos_sin(1, 2.0, 0.0).operator(win).unwrap();
        assert!((pairing(&cos1, &cos1).unwrap() - ONE).norm() < 1e-12);
        let cos2 = TrigPoly::cos_sin(2, 6.0, 0.0).operator(win).unwrap();
        assert!((pairing(&cos2, &cos2).unwrap() - c(18.0, 0.0)).norm() < 1e-12);
        let k = TrigPoly::constant(3.0).operator(win).unwrap();
        assert_eq!(pairing(&k, &k).unwrap(), ZERO);
    }

    #[test]
    fn pairing_demands_margin() {
        let a = TrigPoly::cos_sin(3, 1.0, 0.0).operator(w(4)).unwrap();
        assert!(matches!(pairing(&a, &a), Err(LabError::InsufficientWindow { required: 6, .. })));
    }

    #[test]
    fn pairing_rejects_non_real_symbols() {
        let win = w(4);
        let a = OneParticleOperator::toeplitz(win, &Fourier::monomial(1, ONE)).unwrap();
        assert!(matches!(pairing(&a, &a), Err(LabError::SymmetryViolation { .. })));
    }

    #[test]
    fn schwinger_cos_sin_is_two() {
        let win = w(6);
        let a = TrigPoly::cos_sin(1, 2.0, 0.0).operator(win).unwrap();
        let b = TrigPoly::cos_sin(1, 0.0, 2.0).operator(win).unwrap();
        assert!((pairing(&a, &b).unwrap() - I).norm() < 1e-12);
        let routes = schwinger_routes(&a, &b).unwrap();
        assert!((routes.trace - 2.0).abs() < 1e-12);
        assert!((routes.quadrature - 2.0).abs() < 1e-12);
        assert!((routes.fourier - 2.0).abs() < 1e-12);
        assert!(schwinger_form(&a, &a).unwrap().abs() < 1e-14);
    }

    #[test]
    fn disjoint_fourier_support_gives_zero() {
        let a = TrigPoly::cos_sin(1, 1.0, 0.5);
        let b = TrigPoly::cos_sin(3, -0.3, 2.0);
        assert!(schwinger_of(&a, &b).unwrap().abs() < 1e-14);
    }

    #[test]
    fn winding_examples() {
        assert_eq!(winding_number(&LoopFunction::monomial(1)).unwrap(), 1);
        assert_eq!(winding_number(&LoopFunction::one()).unwrap(), 0);
        let f = LoopFunction::new(-3, TrigPoly::cos_sin(1, 0.2, 0.0));
        assert_eq!(winding_number(&f).unwrap(), -3);
    }

    #[test]
    fn lift_rejects_small_samples() {
        let mut s: Vec<Complex64> = (0..16).map(|j| cis(2.0 * PI * j as f64 / 16.0)).collect();
        s[5] = c(0.1, 0.0);
        assert!(matches!(winding_from_samples(&s), Err(LabError::LiftFailed { index: 5, .. })));
    }

    #[test]
    fn lift_follows_large_phase_excursions() {
        // h swings by ±3 rad, far beyond a naive principal-branch reading
        let f = LoopFunction::new(2, TrigPoly::cos_sin(1, 3.0, 0.0));
        assert_eq!(winding_number(&f).unwrap(), 2);
    }

    #[test]
    fn shift_offdiag_norms() {
        let hs = hs_offdiag_norms(&LoopFunction::monomial(1), HalfSpace::nonnegative(), w(6)).unwrap();
        assert!((hs.p_u_pperp - 1.0).abs() < 1e-14);
        assert_eq!(hs.pperp_u_p, 0.0);
        assert!(hs.converged);
        let diag = UnitaryExpr::Regular(0.6, 0.8);
        let hs = hs_offdiag_norms(&diag, HalfSpace::nonnegative(), w(6)).unwrap();
        assert_eq!((hs.p_u_pperp, hs.pperp_u_p), (0.0, 0.0));
    }

    #[test]
    fn small_amplitude_offdiag_matches_linearization() {
        let amp = 0.4;
        let f = LoopFunction::new(0, TrigPoly::cos_sin(1, amp, 0.0));
        let lin = TrigPoly::cos_sin(1, amp, 0.0).weighted_norm_sq();
        let mut last = None;
        for n in [8, 12, 16] {
            let hs = hs_offdiag_norms(&f, HalfSpace::nonnegative(), w(n)).unwrap();
            assert!(hs.converged);
            // |f_1|² ≈ (amp/2)² to leading order
            assert!((hs.p_u_pperp.powi(2) - lin).abs() < 0.1 * lin);
            if let Some(prev) = last {
                assert!((hs.p_u_pperp - prev as f64).abs() < 1e-12);
            }
            last = Some(hs.p_u_pperp);
        }
    }

    #[test]
    fn non_projection_rejected() {
        let win = w(2);
        let u = OneParticleOperator::identity(win);
        let p = OneParticleOperator::identity(win).scale(c(0.5, 0.0));
        assert!(matches!(offdiag_norms_at(&u, &p), Err(LabError::NotProjection { .. })));
    }

    #[test]
    fn conjugation_is_an_antilinear_involution() {
        let win = w(3);
        let g = Conjugation1P;
        for n in win.modes() {
            let e = win.basis_vector(n).unwrap();
            assert_eq!(g.apply(&e), win.basis_vector(-n).unwrap());
            assert_eq!(g.apply(&g.apply(&e)), e);
            let ie = &e * I;
            assert_eq!(g.apply(&ie), g.apply(&e) * (-I));
        }
    }

    #[test]
    fn loop_json_roundtrip_fills_partners() {
        let f: LoopFunction = serde_json::from_str(r#"{"winding": -2, "h": [[1, 0.0, -0.15]]}"#).unwrap();
        assert_eq!(f.phase().coeff(-1), c(0.0, 0.15));
        let text = serde_json::to_string(&f).unwrap();
        let g: LoopFunction = serde_json::from_str(&text).unwrap();
        assert_eq!(f, g);
        assert!(serde_json::from_str::<LoopFunction>(r#"{"winding": 0, "h": [[1, 1.0, 0.0], [-1, 2.0, 0.0]]}"#).is_err());
    }

    #[test]
    fn unitary_expr_json() {
        let u: UnitaryExpr =
            serde_json::from_str(r#"{"product": [{"loop": {"winding": 2, "h": []}}, {"adjoint": {"loop": {"winding": 1}}}]}"#)
                .unwrap();
        let op = u.build(w(6)).unwrap();
        let v = multiplication_operator(&LoopFunction::monomial(1), w(6)).unwrap();
        let r = op.exact_radius().unwrap() as i64;
        assert_eq!(r, 3);
        for m in -r..=r {
            for n in -r..=r {
                assert_eq!(op.entry(m, n), v.entry(m, n));
            }
        }
    }

    #[test]
    fn export_csv_has_every_entry() {
        let v = multiplication_operator(&LoopFunction::monomial(1), w(1)).unwrap();
        let csv = v.export().to_csv();
        assert_eq!(csv.lines().count(), 10);
        assert!(csv.contains("1,0,1e0,0e0"));
    }
}
