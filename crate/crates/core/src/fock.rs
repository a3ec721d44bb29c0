//! Fermionic Fock space over a mode window with the Dirac sea as vacuum.
//!
//! Basis states are bitmasks: bit `p + n_max` set means mode `p` is
//! occupied. The vacuum fills every negative mode. A state is
//! `c*_{p_k} ⋯ c*_{p_1} |bare⟩` with `p_1 < ⋯ < p_k`, so `c_p` and `c*_p`
//! pick up `(−1)^{#occupied modes above p}`.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::config::Tolerances;
use crate::error::{LabError, Result};
use crate::fredholm::charge_index;
use crate::linalg::{c, cis, CMat, CVec, I, ONE, ZERO};
use crate::mode_space::{
    schwinger_routes, HalfSpace, ModeWindow, OneParticleOperator, SchwingerRoutes, TrigPoly, WindowedOperator,
};
use crate::selfdual::DoubledVector;
use num_complex::Complex64;

pub type State = u64;

/// Largest window the bitmask encoding supports.
pub const MAX_N: usize = 31;

fn bit(window: ModeWindow, mode: i64) -> u32 {
    (mode + window.n_max() as i64) as u32
}

pub fn vacuum(window: ModeWindow) -> State {
    (1u64 << window.n_max()) - 1
}

pub fn occupied(window: ModeWindow, s: State, mode: i64) -> bool {
    window.contains(mode) && s >> bit(window, mode) & 1 == 1
}

pub fn charge(window: ModeWindow, s: State) -> i64 {
    s.count_ones() as i64 - window.n_max() as i64
}

/// `Σ_{occupied} p + n(n+1)/2`: particle modes count `p`, holes at `q < 0`
/// count `−q`.
pub fn energy(window: ModeWindow, s: State) -> i64 {
    let n = window.n_max() as i64;
    let sum: i64 = (0..window.dim() as u32).filter(|b| s >> b & 1 == 1).map(|b| b as i64 - n).sum();
    sum + n * (n + 1) / 2
}

fn sign_above(s: State, b: u32) -> f64 {
    if (s >> (b + 1)).count_ones() % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// `c*_p |s⟩` as `(sign, state)`, or `None` if the mode is occupied.
pub fn create(window: ModeWindow, s: State, mode: i64) -> Option<(f64, State)> {
    let b = bit(window, mode);
    (s >> b & 1 == 0).then(|| (sign_above(s, b), s | 1 << b))
}

/// `c_p |s⟩` as `(sign, state)`, or `None` if the mode is empty.
pub fn annihilate(window: ModeWindow, s: State, mode: i64) -> Option<(f64, State)> {
    let b = bit(window, mode);
    (s >> b & 1 == 1).then(|| (sign_above(s, b), s & !(1 << b)))
}

/// Occupation state as particles above and holes in the sea.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FockBasisState {
    pub particles: Vec<i64>,
    pub holes: Vec<i64>,
}

impl FockBasisState {
    pub fn from_state(window: ModeWindow, s: State) -> Self {
        let particles = (0..=window.n_max() as i64).filter(|&p| occupied(window, s, p)).collect();
        let holes = (-(window.n_max() as i64)..0).filter(|&q| !occupied(window, s, q)).collect();
        Self { particles, holes }
    }

    pub fn to_state(&self, window: ModeWindow) -> Result<State> {
        let mut s = vacuum(window);
        for &p in &self.particles {
            if p < 0 || !window.contains(p) {
                return Err(LabError::InvalidArgument(format!("particle mode {p} outside [0, n_max]")));
            }
            s |= 1 << bit(window, p);
        }
        for &q in &self.holes {
            if q >= 0 || !window.contains(q) {
                return Err(LabError::InvalidArgument(format!("hole mode {q} outside [-n_max, -1]")));
            }
            s &= !(1 << bit(window, q));
        }
        Ok(s)
    }

    pub fn charge(&self) -> i64 {
        self.particles.len() as i64 - self.holes.len() as i64
    }

    pub fn energy(&self) -> i64 {
        self.particles.iter().sum::<i64>() - self.holes.iter().sum::<i64>()
    }
}

/// A set of basis states: the whole occupation space or selected charge
/// sectors.
#[derive(Debug, Clone)]
pub struct FockSpace {
    window: ModeWindow,
    states: Vec<State>,
    index: HashMap<State, usize>,
}

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    (0..k.min(n - k)).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

impl FockSpace {
    /// States with charges in `charges` (all charges when `None`), in
    /// increasing bitmask order.
    pub fn new(window: ModeWindow, charges: Option<&[i64]>, cap: usize) -> Result<Self> {
        if window.n_max() > MAX_N {
            return Err(LabError::DimensionCap { dim: usize::MAX, cap });
        }
        let l = window.dim();
        let n = window.n_max() as i64;
        let wanted: Vec<i64> = match charges {
            Some(cs) => cs.to_vec(),
            None => (-n..=n + 1).collect(),
        };
        let dim: usize = wanted
            .iter()
            .filter_map(|&q| usize::try_from(q + n).ok())
            .map(|k| binomial(l, k))
            .sum();
        if dim > cap {
            return Err(LabError::DimensionCap { dim, cap });
        }
        let mut states = Vec::with_capacity(dim);
        for q in wanted {
            let Ok(k) = usize::try_from(q + n) else { continue };
            if k > l {
                continue;
            }
            states.extend(states_with_popcount(l, k));
        }
        states.sort_unstable();
        states.dedup();
        let index = states.iter().enumerate().map(|(i, &s)| (s, i)).collect();
        Ok(Self { window, states, index })
    }

    pub fn full(window: ModeWindow, cap: usize) -> Result<Self> {
        Self::new(window, None, cap)
    }

    pub fn sector(window: ModeWindow, charge: i64, cap: usize) -> Result<Self> {
        Self::new(window, Some(&[charge]), cap)
    }

    pub fn window(&self) -> ModeWindow {
        self.window
    }

    pub fn states(&self) -> &[State] {
        &self.states
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn position(&self, s: State) -> Option<usize> {
        self.index.get(&s).copied()
    }

    pub fn basis_vector(&self, s: State) -> Result<CVec> {
        let i = self.position(s).ok_or_else(|| LabError::InvalidArgument(format!("state {s:#b} not in space")))?;
        let mut v = CVec::zeros(self.dim());
        v[i] = ONE;
        Ok(v)
    }
}

/// Bitmasks of length `l` with exactly `k` bits set, in increasing order.
fn states_with_popcount(l: usize, k: usize) -> Vec<State> {
    if k == 0 {
        return vec![0];
    }
    let mut out = Vec::with_capacity(binomial(l, k));
    let mut s: u64 = (1u64 << k) - 1;
    let limit = 1u64 << l;
    while s < limit {
        out.push(s);
        // Gosper's hack
        let low = s & s.wrapping_neg();
        let ripple = s + low;
        s = (((ripple ^ s) >> 2) / low) | ripple;
    }
    out
}

/// Sparse vector in the occupation basis.
pub type FockVector = BTreeMap<State, Complex64>;

pub fn fock_norm(v: &FockVector) -> f64 {
    v.values().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn axpy(out: &mut FockVector, s: State, z: Complex64) {
    if z == ZERO {
        return;
    }
    *out.entry(s).or_insert(ZERO) += z;
}

/// Sparse operator stored by columns over an explicit domain of basis
/// states. Columns outside the domain are undefined, not zero.
#[derive(Debug, Clone, PartialEq)]
pub struct FockOperator {
    window: ModeWindow,
    columns: BTreeMap<State, Vec<(State, Complex64)>>,
    charge_shift: Option<i64>,
}

impl FockOperator {
    pub fn from_columns(window: ModeWindow, columns: impl IntoIterator<Item = (State, FockVector)>) -> Self {
        let columns: BTreeMap<State, Vec<(State, Complex64)>> = columns
            .into_iter()
            .map(|(s, v)| (s, v.into_iter().filter(|(_, z)| *z != ZERO).collect()))
            .collect();
        let mut shift: Option<Option<i64>> = None;
        for (&s, col) in &columns {
            for &(t, _) in col {
                let d = charge(window, t) - charge(window, s);
                shift = match shift {
                    None => Some(Some(d)),
                    Some(Some(e)) if e == d => Some(Some(e)),
                    _ => Some(None),
                };
            }
        }
        Self { window, columns, charge_shift: shift.unwrap_or(Some(0)) }
    }

    /// Builds an operator on `space` column by column.
    pub fn from_fn(space: &FockSpace, mut column: impl FnMut(State) -> Option<FockVector>) -> Self {
        let cols: Vec<(State, FockVector)> =
            space.states().iter().filter_map(|&s| column(s).map(|v| (s, v))).collect();
        Self::from_columns(space.window(), cols)
    }

    pub fn identity(space: &FockSpace) -> Self {
        Self::from_fn(space, |s| Some(FockVector::from([(s, ONE)])))
    }

    pub fn window(&self) -> ModeWindow {
        self.window
    }

    pub fn charge_shift(&self) -> Option<i64> {
        self.charge_shift
    }

    pub fn domain(&self) -> impl Iterator<Item = State> + '_ {
        self.columns.keys().copied()
    }

    pub fn in_domain(&self, s: State) -> bool {
        self.columns.contains_key(&s)
    }

    pub fn nnz(&self) -> usize {
        self.columns.values().map(Vec::len).sum()
    }

    pub fn column(&self, s: State) -> Option<&[(State, Complex64)]> {
        self.columns.get(&s).map(Vec::as_slice)
    }

    pub fn entry(&self, row: State, col: State) -> Complex64 {
        self.columns
            .get(&col)
            .and_then(|c| c.iter().find(|(t, _)| *t == row).map(|(_, z)| *z))
            .unwrap_or(ZERO)
    }

    pub fn apply(&self, v: &FockVector) -> Result<FockVector> {
        let mut out = FockVector::new();
        for (&s, &z) in v {
            let col = self.columns.get(&s).ok_or(LabError::MarginExhausted { state: s })?;
            for &(t, a) in col {
                axpy(&mut out, t, a * z);
            }
        }
        Ok(out)
    }

    pub fn apply_state(&self, s: State) -> Result<FockVector> {
        self.apply(&FockVector::from([(s, ONE)]))
    }

    /// `self ∘ other` on the part of `other`'s domain that `other` maps
    /// into `self`'s domain.
    pub fn compose(&self, other: &Self) -> Self {
        let cols = other.columns.iter().filter_map(|(&s, col)| {
            let v: FockVector = col.iter().copied().collect();
            self.apply(&v).ok().map(|w| (s, w))
        });
        Self::from_columns(self.window, cols.collect::<Vec<_>>())
    }

    /// Adjoint on the domain's span, assuming the image lies in it.
    pub fn adjoint(&self) -> Self {
        let mut cols: BTreeMap<State, FockVector> = self.columns.keys().map(|&s| (s, FockVector::new())).collect();
        for (&s, col) in &self.columns {
            for &(t, z) in col {
                axpy(cols.entry(t).or_default(), s, z.conj());
            }
        }
        Self::from_columns(self.window, cols)
    }

    pub fn scale(&self, z: Complex64) -> Self {
        let cols = self.columns.iter().map(|(&s, col)| (s, col.iter().map(|&(t, a)| (t, a * z)).collect()));
        Self::from_columns(self.window, cols.collect::<Vec<(State, FockVector)>>())
    }

    /// Sum on the common domain.
    pub fn add(&self, other: &Self) -> Self {
        let cols = self.columns.iter().filter(|(s, _)| other.in_domain(**s)).map(|(&s, col)| {
            let mut v: FockVector = FockVector::new();
            for &(t, a) in col.iter().chain(other.columns[&s].iter()) {
                axpy(&mut v, t, a);
            }
            (s, v)
        });
        Self::from_columns(self.window, cols.collect::<Vec<_>>())
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(c(-1.0, 0.0)))
    }

    /// `AB − BA` on the states where both products are defined.
    pub fn commutator(&self, other: &Self) -> Self {
        self.compose(other).sub(&other.compose(self))
    }

    /// `AB + BA`.
    pub fn anticommutator(&self, other: &Self) -> Self {
        self.compose(other).add(&other.compose(self))
    }

    /// Largest entry of `self − z·1` over the given columns.
    pub fn distance_to_scalar(&self, z: Complex64, cols: impl IntoIterator<Item = State>) -> f64 {
        let mut worst: f64 = 0.0;
        for s in cols {
            let Some(col) = self.columns.get(&s) else {
                return f64::INFINITY;
            };
            let mut diag = ZERO;
            for &(t, a) in col {
                if t == s {
                    diag += a;
                } else {
                    worst = worst.max(a.norm());
                }
            }
            worst = worst.max((diag - z).norm());
        }
        worst
    }

    /// Largest entry difference over the common domain.
    pub fn distance(&self, other: &Self) -> f64 {
        self.sub(other)
            .columns
            .values()
            .flat_map(|c| c.iter().map(|(_, z)| z.norm()))
            .fold(0.0, f64::max)
    }

    /// Dense block over a space (rows and columns in the space's order).
    pub fn to_dense(&self, space: &FockSpace) -> Result<CMat> {
        let mut m = CMat::zeros(space.dim(), space.dim());
        for (j, &s) in space.states().iter().enumerate() {
            let col = self.columns.get(&s).ok_or(LabError::MarginExhausted { state: s })?;
            for &(t, z) in col {
                if let Some(i) = space.position(t) {
                    m[(i, j)] += z;
                }
            }
        }
        Ok(m)
    }
}

/// Compressed sparse rows over one `FockSpace`.
#[derive(Debug, Clone)]
pub struct SectorMatrix {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    values: Vec<Complex64>,
}

impl SectorMatrix {
    pub fn from_operator(op: &FockOperator, space: &FockSpace) -> Result<Self> {
        let mut rows: Vec<Vec<(usize, Complex64)>> = vec![Vec::new(); space.dim()];
        for (j, &s) in space.states().iter().enumerate() {
            let col = op.columns.get(&s).ok_or(LabError::MarginExhausted { state: s })?;
            for &(t, z) in col {
                let i = space.position(t).ok_or(LabError::NotChargeHomogeneous)?;
                rows[i].push((j, z));
            }
        }
        let mut row_ptr = vec![0];
        let mut cols = Vec::new();
        let mut values = Vec::new();
        for mut r in rows {
            r.sort_by_key(|e| e.0);
            for (j, z) in r {
                cols.push(j);
                values.push(z);
            }
            row_ptr.push(cols.len());
        }
        Ok(Self { dim: space.dim(), row_ptr, cols, values })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matvec(&self, v: &CVec) -> CVec {
        CVec::from_fn(self.dim, |i, _| {
            (self.row_ptr[i]..self.row_ptr[i + 1]).map(|k| self.values[k] * v[self.cols[k]]).sum()
        })
    }

    /// Largest absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.dim)
            .map(|i| (self.row_ptr[i]..self.row_ptr[i + 1]).map(|k| self.values[k].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// `exp(z·M) v` by a Taylor series on `s` substeps with `‖zM‖/s ≤ 1`.
    pub fn exp_action(&self, z: Complex64, v: &CVec) -> CVec {
        let norm = self.norm_inf() * z.norm();
        let steps = norm.ceil().max(1.0) as usize;
        let h = z / steps as f64;
        let mut out = v.clone();
        for _ in 0..steps {
            let mut term = out.clone();
            let mut acc = out.clone();
            for k in 1..=60 {
                term = self.matvec(&term) * (h / k as f64);
                acc += &term;
                if term.norm() <= 1e-17 * acc.norm().max(1e-300) {
                    break;
                }
            }
            out = acc;
        }
        out
    }
}

// Only selfadjointness is required: the energy `diag(n)` is odd under γ.
fn check_generator(a: &OneParticleOperator, tol: f64) -> Result<usize> {
    let h = a.hermiticity_residual();
    if h > tol {
        return Err(LabError::SymmetryViolation { what: "A = A*", residual: h });
    }
    a.bandwidth().ok_or(LabError::InsufficientWindow {
        required: a.window().dim(),
        actual: a.window().n_max(),
    })
}

/// One column of `Σ A_pq c*_p c_q − tr(A P_sea)`.
fn dgamma_column(a: &OneParticleOperator, band: i64, s: State) -> FockVector {
    let w = a.window();
    let n = w.n_max() as i64;
    let mut out = FockVector::new();
    let mut diag = ZERO;
    for q in -n..=n {
        if q < 0 {
            diag -= a.entry(q, q);
        }
        let Some((s1, t)) = annihilate(w, s, q) else { continue };
        diag += a.entry(q, q);
        for p in (q - band).max(-n)..=(q + band).min(n) {
            if p == q {
                continue;
            }
            let apq = a.entry(p, q);
            if apq == ZERO {
                continue;
            }
            if let Some((s2, u)) = create(w, t, p) {
                axpy(&mut out, u, apq * (s1 * s2));
            }
        }
    }
    axpy(&mut out, s, diag);
    out
}

/// Normal-ordered second quantization `dΓ(A)` on `space`.
pub fn dgamma(a: &OneParticleOperator, space: &FockSpace) -> Result<FockOperator> {
    if a.window() != space.window() {
        return Err(LabError::InvalidArgument("window mismatch".into()));
    }
    let band = check_generator(a, Tolerances::default().algebraic)? as i64;
    Ok(FockOperator::from_fn(space, |s| Some(dgamma_column(a, band, s))))
}

pub fn dgamma_sector(a: &OneParticleOperator, space: &FockSpace) -> Result<SectorMatrix> {
    SectorMatrix::from_operator(&dgamma(a, space)?, space)
}

/// `π(B(h)) = c*(f) + c(γg)` for `h = (f, g)`.
pub fn car_field(h: &DoubledVector, space: &FockSpace) -> Result<FockOperator> {
    let w = space.window();
    if h.top.len() != w.dim() {
        return Err(LabError::InvalidArgument("vector not on the Fock window".into()));
    }
    let n = w.n_max() as i64;
    Ok(FockOperator::from_fn(space, |s| {
        let mut out = FockVector::new();
        for p in -n..=n {
            let fp = h.top[(p + n) as usize];
            if fp != ZERO {
                if let Some((sg, t)) = create(w, s, p) {
                    axpy(&mut out, t, fp * sg);
                }
            }
            // (γg)_p = conj(g_{-p}), and c(v) = Σ conj(v_p) c_p
            let gp = h.bottom[(-p + n) as usize];
            if gp != ZERO {
                if let Some((sg, t)) = annihilate(w, s, p) {
                    axpy(&mut out, t, gp * sg);
                }
            }
        }
        Some(out)
    }))
}

/// `a(Πh)`: the part of `B(h)*` that annihilates the vacuum.
pub fn vacuum_annihilator(h: &DoubledVector, space: &FockSpace) -> FockOperator {
    let w = space.window();
    let n = w.n_max() as i64;
    FockOperator::from_fn(space, |s| {
        let mut out = FockVector::new();
        for p in 0..=n {
            let fp = h.top[(p + n) as usize];
            if let Some((sg, t)) = annihilate(w, s, p) {
                axpy(&mut out, t, fp.conj() * sg);
            }
        }
        for q in -n..0 {
            let gq = h.bottom[(-q + n) as usize];
            if let Some((sg, t)) = create(w, s, q) {
                axpy(&mut out, t, gq.conj() * sg);
            }
        }
        Some(out)
    })
}

/// `Φ(λ) = λ^{charge}`.
pub fn gauge_implementer(lambda: Complex64, space: &FockSpace) -> Result<FockOperator> {
    if (lambda.norm() - 1.0).abs() > 1e-12 {
        return Err(LabError::NotUnimodular { modulus: lambda.norm() });
    }
    let w = space.window();
    Ok(FockOperator::from_fn(space, |s| Some(FockVector::from([(s, lambda.powi(charge(w, s) as i32))]))))
}

/// `Φ(V₁)^n |S⟩`: every occupied mode moves up by `n` and the bottom `n`
/// modes fill from the sea below the window (for `n < 0`, the bottom `|n|`
/// modes must be filled and are returned to the sea). The ordered-creation
/// convention makes every sign `+1`.
pub fn shifted_state(window: ModeWindow, s: State, n: i64) -> Option<State> {
    let l = window.dim() as u32;
    let k = n.unsigned_abs() as u32;
    if k >= l {
        return None;
    }
    let full = (1u64 << l) - 1;
    let low = (1u64 << k) - 1;
    if n >= 0 {
        let top = low << (l - k);
        (s & top == 0).then(|| ((s << k) | low) & full)
    } else {
        (s & low == low).then(|| s >> k)
    }
}

/// `Φ(V₁)^n` on the states of `space` it can act on without leaving the
/// window.
pub fn shift_power(space: &FockSpace, n: i64) -> FockOperator {
    let w = space.window();
    FockOperator::from_fn(space, |s| shifted_state(w, s, n).map(|t| FockVector::from([(t, ONE)])))
}

pub fn shift_implementer(space: &FockSpace) -> FockOperator {
    shift_power(space, 1)
}

/// Exponent `q` with `Φ(λ) Φ_U Φ(λ)⁻¹ = λ^q Φ_U` for the 16th roots of unity.
pub fn covariance_exponent(phi_u: &FockOperator, tol: f64) -> Result<(i64, f64)> {
    let w = phi_u.window;
    let mut fits = Vec::new();
    for q in -8..8i64 {
        let mut worst: f64 = 0.0;
        for k in 0..16 {
            let lambda = cis(2.0 * std::f64::consts::PI * k as f64 / 16.0);
            for (&s, col) in &phi_u.columns {
                for &(t, z) in col {
                    let conj = lambda.powi(charge(w, t) as i32) * z * lambda.powi(-charge(w, s) as i32);
                    worst = worst.max((conj - lambda.powi(q as i32) * z).norm());
                }
            }
        }
        if worst <= tol {
            fits.push((q, worst));
        }
    }
    match fits.as_slice() {
        [one] if phi_u.nnz() > 0 => Ok(*one),
        _ => Err(LabError::NotChargeHomogeneous),
    }
}

/// Gauge covariance of a Fock implementer, computed with explicit
/// `Φ(λ)` products, cross-checked against the one-particle index.
pub fn gauge_covariance<T: WindowedOperator + ?Sized>(u: &T, phi_u: &FockOperator, space: &FockSpace) -> Result<i64> {
    let tol = Tolerances::default().fock;
    let mut worst: f64 = 0.0;
    let (q, _) = covariance_exponent(phi_u, tol)?;
    for k in 0..16 {
        let lambda = cis(2.0 * std::f64::consts::PI * k as f64 / 16.0);
        let g = gauge_implementer(lambda, space)?;
        let g_inv = gauge_implementer(lambda.conj(), space)?;
        let lhs = g.compose(&phi_u.compose(&g_inv));
        worst = worst.max(lhs.distance(&phi_u.scale(lambda.powi(q as i32))));
    }
    if worst > tol {
        return Err(LabError::NotChargeHomogeneous);
    }
    let index = charge_index(u, HalfSpace::nonnegative(), None)?.q;
    if index != q {
        return Err(LabError::Consistency { what: "covariance exponent vs index", left: q as f64, right: index as f64 });
    }
    Ok(q)
}

/// Second quantization `Λ(U)` of a window matrix on `space`:
/// `⟨T|Λ(U)|S⟩ = det U[T, S]`.
pub fn second_quantize(u: &CMat, space: &FockSpace) -> FockOperator {
    let w = space.window();
    let l = w.dim();
    let modes = |s: State| -> Vec<usize> { (0..l).filter(|b| s >> b & 1 == 1).collect() };
    let by_charge: BTreeMap<u32, Vec<State>> = space.states().iter().fold(BTreeMap::new(), |mut m, &s| {
        m.entry(s.count_ones()).or_default().push(s);
        m
    });
    FockOperator::from_fn(space, |s| {
        let cols = modes(s);
        let k = cols.len();
        let mut out = FockVector::new();
        for &t in &by_charge[&s.count_ones()] {
            let rows = modes(t);
            let z = if k == 0 { ONE } else { CMat::from_fn(k, k, |i, j| u[(rows[i], cols[j])]).determinant() };
            axpy(&mut out, t, z);
        }
        Some(out)
    })
}

/// Implementer of a charge-preserving window unitary, phase fixed so the
/// vacuum amplitude is real and positive, plus its intertwining residual.
#[derive(Debug, Clone)]
pub struct ImplementerSolution {
    pub operator: FockOperator,
    /// `max ‖Φ B(h) − B(φ(U)h) Φ‖` over the probe vectors on margin-safe
    /// states.
    pub residual: f64,
}

pub fn solve_implementer(u: &OneParticleOperator, space: &FockSpace, probes: &[DoubledVector]) -> Result<ImplementerSolution> {
    let mut op = second_quantize(u.matrix(), space);
    let vac = vacuum(space.window());
    let amp = op.entry(vac, vac);
    if amp.norm() > 1e-12 {
        op = op.scale(amp.conj() / amp.norm());
    }
    let phi_u = crate::selfdual::bogoljubov_double(u).ok();
    let mut residual: f64 = 0.0;
    if let Some(phi_u) = phi_u {
        for h in probes {
            let lhs = op.compose(&car_field(h, space)?);
            let rhs = car_field(&phi_u.apply(h), space)?.compose(&op);
            residual = residual.max(lhs.distance(&rhs));
        }
    }
    Ok(ImplementerSolution { operator: op, residual })
}

/// Phase-fixed implementer of `U_f`: `Λ` of the winding-free part composed
/// with `Φ(V₁)^w`.
pub fn loop_implementer(f: &crate::mode_space::LoopFunction, space: &FockSpace) -> Result<FockOperator> {
    let w = f.stored_winding();
    let zero_winding = crate::mode_space::LoopFunction::new(0, f.phase().clone());
    let (u, _) = crate::mode_space::truncated_multiplication_operator(&zero_winding, space.window());
    let lambda = second_quantize(u.matrix(), space);
    let shift = shift_power(space, w);
    let mut op = shift.compose(&lambda);
    let vac = vacuum(space.window());
    if let Some(target) = shifted_state(space.window(), vac, w) {
        let amp = op.entry(target, vac);
        if amp.norm() > 1e-12 {
            op = op.scale(amp.conj() / amp.norm());
        }
    }
    Ok(op)
}

/// `[dΓ(A₂), dΓ(A₁)]` compared with `i·s(A₁, A₂)·1` on the charge-zero
/// states whose boundary strips are in vacuum configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SchwingerCommutator {
    pub scalar: Complex64,
    pub routes: SchwingerRoutes,
    /// Largest entry of the commutator minus `scalar·1` on the safe states.
    pub residual: f64,
    pub safe_states: usize,
    pub window: usize,
}

/// Charge-zero states whose `strip` outermost modes on each side look like
/// the vacuum.
pub fn margin_safe_states(space: &FockSpace, strip: usize) -> Vec<State> {
    let w = space.window();
    let l = w.dim() as u32;
    let strip = (strip as u32).min(l);
    let low = (1u64 << strip) - 1;
    let top = low << (l - strip);
    space.states().iter().copied().filter(|&s| s & low == low && s & top == 0).collect()
}

pub fn schwinger_commutator(a1: &OneParticleOperator, a2: &OneParticleOperator, cap: usize) -> Result<SchwingerCommutator> {
    let tol = Tolerances::default();
    // window matrices of multiplication operators commute away from the
    // boundary; check the interior block
    let r = a1.exact_radius().zip(a2.exact_radius()).map(|(x, y)| x.min(y)).ok_or(LabError::InsufficientWindow {
        required: a1.band() + a2.band(),
        actual: a1.window().n_max(),
    })?;
    let interior_comm = interior_commutator(a1, a2, r)?;
    if interior_comm > tol.algebraic {
        return Err(LabError::InvalidArgument(format!("generators do not commute (residual {interior_comm:.3e})")));
    }
    let strip = a1.band() + a2.band();
    let n = a1.window().n_max();
    if n < strip + 1 {
        return Err(LabError::InsufficientWindow { required: strip + 1, actual: n });
    }
    let routes = schwinger_routes(a1, a2)?;
    if routes.spread() > tol.quadrature {
        return Err(LabError::Consistency { what: "symplectic form routes", left: routes.trace, right: routes.quadrature });
    }
    let scalar = I * routes.trace;
    let space = FockSpace::sector(a1.window(), 0, cap)?;
    let d1 = dgamma(a1, &space)?;
    let d2 = dgamma(a2, &space)?;
    let safe = margin_safe_states(&space, strip);
    let mut residual: f64 = 0.0;
    for &s in &safe {
        let e = FockVector::from([(s, ONE)]);
        let x = d2.apply(&d1.apply(&e)?)?;
        let y = d1.apply(&d2.apply(&e)?)?;
        let mut diff = x;
        for (t, z) in y {
            axpy(&mut diff, t, -z);
        }
        axpy(&mut diff, s, -scalar);
        residual = residual.max(diff.values().map(|z| z.norm()).fold(0.0, f64::max));
    }
    Ok(SchwingerCommutator { scalar, routes, residual, safe_states: safe.len(), window: n })
}

fn interior_commutator(a: &OneParticleOperator, b: &OneParticleOperator, r: usize) -> Result<f64> {
    let ab = a.mul(b)?;
    let ba = b.mul(a)?;
    let r = r as i64;
    let mut worst: f64 = 0.0;
    let rr = r - a.band().max(b.band()) as i64;
    for m in -rr..=rr {
        for k in -rr..=rr {
            worst = worst.max((ab.entry(m, k) - ba.entry(m, k)).norm());
        }
    }
    Ok(worst)
}

/// `exp(i·dΓ(A))` on the charge-zero sector, column by column.
pub fn weyl_exponential(a: &OneParticleOperator, cap: usize) -> Result<FockOperator> {
    let space = FockSpace::sector(a.window(), 0, cap)?;
    let h = dgamma_sector(a, &space)?;
    let cols: Vec<(State, FockVector)> = space
        .states()
        .iter()
        .enumerate()
        .map(|(j, &s)| {
            let mut e = CVec::zeros(space.dim());
            e[j] = ONE;
            let out = h.exp_action(I, &e);
            (s, space.states().iter().zip(out.iter()).map(|(&t, &z)| (t, z)).collect())
        })
        .collect();
    Ok(FockOperator::from_columns(a.window(), cols))
}

/// `exp(i·dΓ(A)) v` for a vector on the charge-zero sector.
pub fn weyl_action(a: &OneParticleOperator, space: &FockSpace, v: &CVec) -> Result<CVec> {
    Ok(dgamma_sector(a, space)?.exp_action(I, v))
}

/// `⟨Ω| exp(i dΓ(A)) |Ω⟩` by the sparse Taylor action on the charge-zero
/// sector.
pub fn vacuum_expectation_action(a: &OneParticleOperator, cap: usize) -> Result<Complex64> {
    let space = FockSpace::sector(a.window(), 0, cap)?;
    let omega = space.basis_vector(vacuum(a.window()))?;
    let out = weyl_action(a, &space, &omega)?;
    Ok(omega.dotc(&out))
}

/// `⟨Ω| exp(i dΓ(A)) |Ω⟩ = e^{−i tr(A P_sea)} det(e^{iA}[sea, sea])`.
pub fn vacuum_expectation_det(a: &OneParticleOperator) -> Result<Complex64> {
    check_generator(a, Tolerances::default().algebraic)?;
    let n = a.window().n_max();
    let e = crate::linalg::expm(&(a.matrix() * I));
    let sea = e.view((0, 0), (n, n)).into_owned();
    let tr: Complex64 = (0..n).map(|i| a.matrix()[(i, i)]).sum();
    Ok((-I * tr).exp() * sea.determinant())
}

/// Result of comparing `W(A)W(B)` with `W(A+B)` on probe states.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WeylRelation {
    /// `⟨W(A+B)v, W(A)W(B)v⟩` on the vacuum.
    pub phase: Complex64,
    pub s: f64,
    /// `+1` if `arg(phase) = +s/2`, `−1` if `−s/2`, `0` if neither.
    pub sign: i8,
    /// Largest `‖W(A)W(B)v − phase·W(A+B)v‖` over the probes.
    pub residual: f64,
    pub window: usize,
}

pub fn weyl_relation(a: &TrigPoly, b: &TrigPoly, window: ModeWindow, cap: usize) -> Result<WeylRelation> {
    let tol = Tolerances::default();
    let (oa, ob, oab) = (a.operator(window)?, b.operator(window)?, a.add(b).operator(window)?);
    let s = crate::mode_space::schwinger_form(&oa, &ob)?;
    let space = FockSpace::sector(window, 0, cap)?;
    let (ha, hb, hab) = (dgamma_sector(&oa, &space)?, dgamma_sector(&ob, &space)?, dgamma_sector(&oab, &space)?);
    let omega = space.basis_vector(vacuum(window))?;
    // particle-hole pair at the centre as a second probe
    let ph = {
        let (s1, t) = annihilate(window, vacuum(window), -1).expect("sea mode filled");
        let (s2, u) = create(window, t, 1).expect("mode empty");
        space.basis_vector(u)?.map(|z| z * s1 * s2)
    };
    let mut phase = ZERO;
    let mut residual: f64 = 0.0;
    for (k, v) in [omega, ph].into_iter().enumerate() {
        let lhs = ha.exp_action(I, &hb.exp_action(I, &v));
        let rhs = hab.exp_action(I, &v);
        let p = rhs.dotc(&lhs);
        if k == 0 {
            phase = p;
        }
        residual = residual.max((lhs - rhs * p).norm());
    }
    let plus = (phase - cis(s / 2.0)).norm();
    let minus = (phase - cis(-s / 2.0)).norm();
    let sign = if plus < tol.fock.sqrt() && plus <= minus {
        1
    } else if minus < tol.fock.sqrt() {
        -1
    } else {
        0
    };
    Ok(WeylRelation { phase, s, sign, residual, window: window.n_max() })
}

/// Spectrum of the implemented circle-action generator `dΓ(diag(n))`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PositivityReport {
    pub window: usize,
    pub min_eigenvalue: f64,
    pub vacuum_eigenvalue: f64,
    /// Zero eigenvalues on the whole occupation space (`Ω` and `c*₀Ω`).
    pub zero_multiplicity: usize,
    /// Zero eigenvalues within charge zero.
    pub zero_multiplicity_charge0: usize,
    pub second_lowest: f64,
    /// The operator built by `dgamma` is diagonal with the enumerated
    /// energies.
    pub diagonal: bool,
}

pub fn spectrum_positivity(window: ModeWindow, cap: usize) -> Result<PositivityReport> {
    let space = FockSpace::full(window, cap)?;
    let h = OneParticleOperator::diagonal(window, |n| c(n as f64, 0.0));
    let d = dgamma(&h, &space)?;
    let mut eigen = Vec::with_capacity(space.dim());
    let mut diagonal = true;
    for &s in space.states() {
        let e = energy(window, s) as f64;
        let col = d.column(s).unwrap_or(&[]);
        let mut diag = ZERO;
        for &(t, z) in col {
            if t == s {
                diag += z;
            } else if z.norm() > 1e-12 {
                diagonal = false;
            }
        }
        if (diag.re - e).abs() > 1e-12 || diag.im.abs() > 1e-12 {
            diagonal = false;
        }
        eigen.push((diag.re, charge(window, s)));
    }
    let min = eigen.iter().map(|e| e.0).fold(f64::INFINITY, f64::min);
    let zeros = eigen.iter().filter(|e| e.0.abs() < 1e-12).count();
    let zeros0 = eigen.iter().filter(|e| e.0.abs() < 1e-12 && e.1 == 0).count();
    let second = eigen.iter().map(|e| e.0).filter(|&e| e > min + 0.5).fold(f64::INFINITY, f64::min);
    let vac = d.entry(vacuum(window), vacuum(window)).re;
    Ok(PositivityReport {
        window: window.n_max(),
        min_eigenvalue: min,
        vacuum_eigenvalue: vac,
        zero_multiplicity: zeros,
        zero_multiplicity_charge0: zeros0,
        second_lowest: second,
        diagonal,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs_diff;
    use crate::mode_space::{pairing, LoopFunction, UnitaryExpr};
    use crate::sampling;
    use crate::selfdual::bogoljubov_double;
    use proptest::prelude::*;
    use rand::Rng;

    const CAP: usize = 1 << 16;

    fn w(n: usize) -> ModeWindow {
        ModeWindow::new(n).unwrap()
    }

    fn random_doubled(rng: &mut impl Rng, window: ModeWindow, support: i64) -> DoubledVector {
        let n = window.n_max() as i64;
        let mut v = |_: ()| {
            CVec::from_fn(window.dim(), |i, _| {
                if (i as i64 - n).abs() <= support {
                    c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
                } else {
                    ZERO
                }
            })
        };
        let top = v(());
        let bottom = v(());
        DoubledVector::new(top, bottom).unwrap()
    }

    #[test]
    fn vacuum_bookkeeping() {
        let win = w(3);
        let v = vacuum(win);
        assert_eq!(charge(win, v), 0);
        assert_eq!(energy(win, v), 0);
        let b = FockBasisState::from_state(win, v);
        assert!(b.particles.is_empty() && b.holes.is_empty());
        let s = FockBasisState { particles: vec![0, 2], holes: vec![-1] }.to_state(win).unwrap();
        assert_eq!(charge(win, s), 1);
        assert_eq!(energy(win, s), 3);
        assert_eq!(FockBasisState::from_state(win, s).energy(), 3);
    }

    #[test]
    fn car_relations_for_elementary_modes() {
        let win = w(2);
        let space = FockSpace::full(win, CAP).unwrap();
        let id = FockOperator::identity(&space);
        let zero = id.scale(ZERO);
        let cre = |p: i64| FockOperator::from_fn(&space, |s| Some(create(win, s, p).map(|(g, t)| FockVector::from([(t, c(g, 0.0))])).unwrap_or_default()));
        let ann = |p: i64| FockOperator::from_fn(&space, |s| Some(annihilate(win, s, p).map(|(g, t)| FockVector::from([(t, c(g, 0.0))])).unwrap_or_default()));
        for p in -2..=2 {
            for q in -2..=2 {
                let ac = ann(p).anticommutator(&cre(q));
                let want = if p == q { &id } else { &zero };
                assert!(ac.distance(want) < 1e-15);
                assert!(ann(p).anticommutator(&ann(q)).distance(&zero) < 1e-15);
            }
        }
    }

    #[test]
    fn self_dual_car_relations() {
        let win = w(2);
        let space = FockSpace::full(win, CAP).unwrap();
        let mut rng = sampling::rng(11);
        for _ in 0..4 {
            let h = random_doubled(&mut rng, win, 2);
            let k = random_doubled(&mut rng, win, 2);
            let bh = car_field(&h, &space).unwrap();
            let bk = car_field(&k, &space).unwrap();
            let ac = bh.adjoint().anticommutator(&bk);
            assert!(ac.distance_to_scalar(h.inner(&k), space.states().iter().copied()) < 1e-12);
            let gh = car_field(&crate::selfdual::DoubledConjugation.apply(&h), &space).unwrap();
            assert!(gh.distance(&bh.adjoint()) < 1e-12);
        }
    }

    #[test]
    fn unit_vector_in_pi_h_gives_unit_anticommutator() {
        let win = w(2);
        let space = FockSpace::full(win, CAP).unwrap();
        let mut top = CVec::zeros(win.dim());
        top[win.index(1).unwrap()] = ONE;
        let h = DoubledVector::new(top, CVec::zeros(win.dim())).unwrap();
        let b = car_field(&h, &space).unwrap();
        let ac = b.adjoint().compose(&b).add(&b.compose(&b.adjoint()));
        assert!(ac.distance_to_scalar(ONE, space.states().iter().copied()) < 1e-14);
    }

    #[test]
    fn orthogonal_fields_anticommute() {
        let win = w(2);
        let space = FockSpace::full(win, CAP).unwrap();
        let e = |m: i64| win.basis_vector(m).unwrap();
        let h = DoubledVector::new(e(1), CVec::zeros(win.dim())).unwrap();
        let k = DoubledVector::new(e(2), CVec::zeros(win.dim())).unwrap();
        let ac = car_field(&h, &space).unwrap().adjoint().anticommutator(&car_field(&k, &space).unwrap());
        assert!(ac.distance_to_scalar(ZERO, space.states().iter().copied()) < 1e-15);
    }

    #[test]
    fn vacuum_is_annihilated() {
        let win = w(3);
        let space = FockSpace::full(win, CAP).unwrap();
        let mut rng = sampling::rng(5);
        for _ in 0..10 {
            let h = random_doubled(&mut rng, win, 3);
            let out = vacuum_annihilator(&h, &space).apply_state(vacuum(win)).unwrap();
            assert!(fock_norm(&out) < 1e-15);
        }
    }

    #[test]
    fn dgamma_examples() {
        let win = w(4);
        let space = FockSpace::full(win, CAP).unwrap();
        let zero = dgamma(&TrigPoly::zero().operator(win).unwrap(), &space).unwrap();
        assert_eq!(zero.nnz(), 0);
        let a = TrigPoly::cos_sin(1, 2.0, 0.0).operator(win).unwrap();
        let d = dgamma(&a, &space).unwrap();
        assert_eq!(d.charge_shift(), Some(0));
        assert!(d.distance(&d.adjoint()) < 1e-15);
        let om = d.apply_state(vacuum(win)).unwrap();
        assert!(om.get(&vacuum(win)).copied().unwrap_or(ZERO).norm() < 1e-15);
        // ⟨Ω|dΓ(A)²|Ω⟩ = ‖dΓ(A)Ω‖²
        let second = fock_norm(&om).powi(2);
        assert!((second - pairing(&a, &a).unwrap().re).abs() < 1e-12);
        assert!((second - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dgamma_rejects_dense_or_asymmetric() {
        let win = w(2);
        let space = FockSpace::full(win, CAP).unwrap();
        let bad = OneParticleOperator::from_matrix(win, CMat::from_fn(5, 5, |i, j| c((i * 5 + j) as f64, 0.0))).unwrap();
        assert!(dgamma(&bad, &space).is_err());
    }

    #[test]
    fn gauge_examples() {
        let win = w(3);
        let space = FockSpace::full(win, CAP).unwrap();
        assert_eq!(gauge_implementer(ONE, &space).unwrap(), FockOperator::identity(&space));
        let lambda = cis(0.9);
        let g = gauge_implementer(lambda, &space).unwrap();
        assert!((g.entry(vacuum(win), vacuum(win)) - ONE).norm() < 1e-15);
        let (_, p2) = create(win, vacuum(win), 2).unwrap();
        assert!((g.entry(p2, p2) - lambda).norm() < 1e-15);
        assert!(gauge_implementer(c(2.0, 0.0), &space).is_err());
    }

    #[test]
    fn shift_maps_vacuum_to_particle_at_zero() {
        let win = w(4);
        let space = FockSpace::full(win, CAP).unwrap();
        let phi = shift_implementer(&space);
        let out = phi.apply_state(vacuum(win)).unwrap();
        let (sg, want) = create(win, vacuum(win), 0).unwrap();
        assert_eq!(sg, 1.0);
        assert_eq!(out, FockVector::from([(want, ONE)]));
        assert_eq!(phi.charge_shift(), Some(1));
        // top mode occupied: outside the domain
        let (_, top) = create(win, vacuum(win), 4).unwrap();
        assert!(matches!(phi.apply_state(top), Err(LabError::MarginExhausted { .. })));
    }

    #[test]
    fn shift_intertwines_fields() {
        let win = w(4);
        let space = FockSpace::full(win, CAP).unwrap();
        let phi = shift_implementer(&space);
        let v = crate::mode_space::multiplication_operator(&LoopFunction::monomial(1), win).unwrap();
        let dv = bogoljubov_double(&v).unwrap();
        let mut rng = sampling::rng(3);
        for _ in 0..10 {
            // support away from the top mode so the image stays in the window
            let mut h = random_doubled(&mut rng, win, 3);
            h.top[win.index(4).unwrap()] = ZERO;
            h.bottom[win.index(-4).unwrap()] = ZERO;
            let lhs = phi.compose(&car_field(&h, &space).unwrap());
            let rhs = car_field(&dv.apply(&h), &space).unwrap().compose(&phi);
            let safe: Vec<State> = phi.domain().filter(|&s| !occupied(win, s, 3) && !occupied(win, s, 4)).collect();
            for s in safe {
                let a = lhs.apply_state(s).unwrap();
                let b = rhs.apply_state(s).unwrap();
                let mut d = a.clone();
                for (t, z) in b {
                    axpy(&mut d, t, -z);
                }
                assert!(d.values().all(|z| z.norm() < 1e-12));
            }
        }
    }

    #[test]
    fn shift_inverse_round_trip() {
        let win = w(3);
        let space = FockSpace::full(win, CAP).unwrap();
        let up = shift_power(&space, 1);
        let down = shift_power(&space, -1);
        let rt = down.compose(&up);
        let domain: Vec<State> = rt.domain().collect();
        assert_eq!(domain.len(), 1 << 6);
        assert!(rt.distance_to_scalar(ONE, domain) < 1e-15);
    }

    #[test]
    fn covariance_of_shift_powers_and_gauge() {
        let win = w(4);
        let space = FockSpace::full(win, CAP).unwrap();
        let phi = shift_implementer(&space);
        assert_eq!(gauge_covariance(&LoopFunction::monomial(1), &phi, &space).unwrap(), 1);
        let phi3 = phi.compose(&phi.compose(&phi));
        assert_eq!(gauge_covariance(&LoopFunction::monomial(3), &phi3, &space).unwrap(), 3);
        let g = gauge_implementer(cis(0.4), &space).unwrap();
        assert_eq!(gauge_covariance(&UnitaryExpr::Scalar(0.4f64.cos(), 0.4f64.sin()), &g, &space).unwrap(), 0);
    }

    #[test]
    fn covariance_rejects_mixed_charge() {
        let win = w(2);
        let space = FockSpace::full(win, CAP).unwrap();
        let mixed = FockOperator::identity(&space).add(&shift_implementer(&space));
        assert!(matches!(covariance_exponent(&mixed, 1e-10), Err(LabError::NotChargeHomogeneous)));
    }

    #[test]
    fn loop_implementer_charge() {
        let win = w(3);
        let space = FockSpace::full(win, CAP).unwrap();
        let f = LoopFunction::new(-2, TrigPoly::cos_sin(1, 0.3, 0.0));
        let phi = loop_implementer(&f, &space).unwrap();
        assert_eq!(covariance_exponent(&phi, 1e-10).unwrap().0, -2);
    }

    #[test]
    fn schwinger_cos_sin() {
        let win = w(6);
        let a1 = TrigPoly::cos_sin(1, 2.0, 0.0).operator(win).unwrap();
        let a2 = TrigPoly::cos_sin(1, 0.0, 2.0).operator(win).unwrap();
        let r = schwinger_commutator(&a1, &a2, CAP).unwrap();
        assert!((r.scalar - c(0.0, 2.0)).norm() < 1e-12);
        assert!(r.residual < 1e-10, "residual {}", r.residual);
        assert!(r.safe_states > 0);
        let same = schwinger_commutator(&a1, &a1, CAP).unwrap();
        assert!(same.scalar.norm() < 1e-15 && same.residual < 1e-10);
    }

    #[test]
    fn disjoint_fourier_support_commutator_vanishes() {
        let win = w(6);
        let a1 = TrigPoly::cos_sin(1, 1.0, 0.3).operator(win).unwrap();
        let a2 = TrigPoly::cos_sin(2, -0.5, 0.8).operator(win).unwrap();
        let r = schwinger_commutator(&a1, &a2, CAP).unwrap();
        assert!(r.scalar.norm() < 1e-15);
        assert!(r.residual < 1e-12);
    }

    #[test]
    fn weyl_exponential_small_window() {
        let win = w(3);
        let zero = weyl_exponential(&TrigPoly::zero().operator(win).unwrap(), CAP).unwrap();
        let space = FockSpace::sector(win, 0, CAP).unwrap();
        assert!(zero.distance(&FockOperator::identity(&space)) < 1e-15);
        let a = TrigPoly::cos_sin(1, 0.8, 0.3).operator(win).unwrap();
        let u = weyl_exponential(&a, CAP).unwrap().to_dense(&space).unwrap();
        let id = CMat::identity(space.dim(), space.dim());
        assert!(max_abs_diff(&(&u * u.adjoint()), &id) < 1e-9);
    }

    #[test]
    fn vev_routes_agree() {
        for n in [4, 6] {
            let a = TrigPoly::cos_sin(1, 1.0, 0.0).operator(w(n)).unwrap();
            let x = vacuum_expectation_action(&a, CAP).unwrap();
            let y = vacuum_expectation_det(&a).unwrap();
            assert!((x - y).norm() < 1e-10, "{x} vs {y}");
        }
    }

    #[test]
    fn weyl_relation_sign_is_positive() {
        let a = TrigPoly::cos_sin(1, 1.0, 0.0);
        let b = TrigPoly::cos_sin(1, 0.0, 1.0);
        let r6 = weyl_relation(&a, &b, w(6), CAP).unwrap();
        let r8 = weyl_relation(&a, &b, w(8), CAP).unwrap();
        assert!((r6.s - 0.5).abs() < 1e-12);
        assert_eq!((r6.sign, r8.sign), (1, 1), "phase {}", r6.phase);
        // boundary leakage shrinks with the window
        assert!(r8.residual < r6.residual && r8.residual < 1e-6);
        assert!((r8.phase - cis(0.25)).norm() < 1e-9);
    }

    #[test]
    fn positivity_n4() {
        let r = spectrum_positivity(w(4), CAP).unwrap();
        assert!(r.diagonal);
        assert_eq!(r.min_eigenvalue, 0.0);
        assert_eq!(r.vacuum_eigenvalue, 0.0);
        assert_eq!(r.zero_multiplicity_charge0, 1);
        assert_eq!(r.zero_multiplicity, 2);
        assert_eq!(r.second_lowest, 1.0);
    }

    #[test]
    fn single_excitation_energies() {
        let win = w(4);
        let p3 = FockBasisState { particles: vec![3], holes: vec![] }.to_state(win).unwrap();
        let h2 = FockBasisState { particles: vec![], holes: vec![-2] }.to_state(win).unwrap();
        let space = FockSpace::full(win, CAP).unwrap();
        let d = dgamma(&OneParticleOperator::diagonal(win, |n| c(n as f64, 0.0)), &space).unwrap();
        assert_eq!(d.entry(p3, p3), c(3.0, 0.0));
        assert_eq!(d.entry(h2, h2), c(2.0, 0.0));
    }

    #[test]
    fn dimension_cap_enforced() {
        assert!(matches!(FockSpace::sector(w(8), 0, 1000), Err(LabError::DimensionCap { dim: 24310, cap: 1000 })));
    }

    #[test]
    fn second_quantize_of_diagonal_is_gauge() {
        let win = w(3);
        let space = FockSpace::full(win, CAP).unwrap();
        let lambda = cis(1.3);
        let u = CMat::identity(win.dim(), win.dim()) * lambda;
        let sol = solve_implementer(&OneParticleOperator::from_matrix(win, u).unwrap(), &space, &[]).unwrap();
        // phase fixed on the vacuum: Λ(λ) = λ^{N + charge} → λ^{charge}
        assert!(sol.operator.distance(&gauge_implementer(lambda, &space).unwrap()) < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(8))]

        #[test]
        fn dgamma_is_real_linear_and_selfadjoint(seed in any::<u64>()) {
            let mut rng = sampling::rng(seed);
            let win = w(3);
            let space = FockSpace::sector(win, 0, CAP).unwrap();
            let a = sampling::trig_poly(&mut rng, 2, 1.0);
            let b = sampling::trig_poly(&mut rng, 2, 1.0);
            let (x, y) = (rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
            let lhs = dgamma(&a.scale(x).add(&b.scale(y)).operator(win).unwrap(), &space).unwrap();
            let da = dgamma(&a.operator(win).unwrap(), &space).unwrap();
            let db = dgamma(&b.operator(win).unwrap(), &space).unwrap();
            let rhs = da.scale(c(x, 0.0)).add(&db.scale(c(y, 0.0)));
            prop_assert!(lhs.distance(&rhs) < 1e-12);
            prop_assert!(da.distance(&da.adjoint()) < 1e-14);
        }

        #[test]
        fn products_add_charge_shifts(n1 in -2i64..=2, n2 in -2i64..=2) {
            let win = w(3);
            let space = FockSpace::full(win, CAP).unwrap();
            let a = shift_power(&space, n1);
            let b = shift_power(&space, n2);
            let ab = a.compose(&b);
            if ab.nnz() > 0 {
                prop_assert_eq!(ab.charge_shift(), Some(n1 + n2));
            }
        }
    }
}
