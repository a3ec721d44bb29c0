//! Doubled one-particle space `H = H₀ ⊕ H₀` with the conjugation
//! `Γ(f, g) = (γg, γf)`, Bogoljubov doublings and basis projections.
//!
//! Doubled operators are kept as four window-sized blocks.

use serde::{Deserialize, Serialize};

use crate::config::Tolerances;
use crate::error::{LabError, Result};
use crate::fredholm::{side_index, IndexReport, Side};
use crate::linalg::{expm, max_abs_diff, CMat, CVec, I};
use crate::mode_space::{hs_offdiag_norms, Conjugation1P, HalfSpace, HsNorms, ModeWindow, OneParticleOperator, WindowedOperator};
use num_complex::Complex64;

#[derive(Debug, Clone, PartialEq)]
pub struct DoubledVector {
    pub top: CVec,
    pub bottom: CVec,
}

impl DoubledVector {
    pub fn new(top: CVec, bottom: CVec) -> Result<Self> {
        if top.len() != bottom.len() {
            return Err(LabError::InvalidArgument("doubled components differ in length".into()));
        }
        Ok(Self { top, bottom })
    }

    pub fn zeros(window: ModeWindow) -> Self {
        Self { top: CVec::zeros(window.dim()), bottom: CVec::zeros(window.dim()) }
    }

    pub fn norm_sq(&self) -> f64 {
        self.top.norm_squared() + self.bottom.norm_squared()
    }

    /// `⟨self, other⟩`, antilinear in `self`.
    pub fn inner(&self, other: &Self) -> Complex64 {
        self.top.dotc(&other.top) + self.bottom.dotc(&other.bottom)
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self { top: &self.top * s, bottom: &self.bottom * s }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self { top: &self.top + &other.top, bottom: &self.bottom + &other.bottom }
    }
}

/// `Γ(f, g) = (γg, γf)`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DoubledConjugation;

impl DoubledConjugation {
    pub fn apply(&self, h: &DoubledVector) -> DoubledVector {
        let g = Conjugation1P;
        DoubledVector { top: g.apply(&h.bottom), bottom: g.apply(&h.top) }
    }

    /// `ΓXΓ` blockwise.
    pub fn conjugate(&self, x: &DoubledOperator) -> DoubledOperator {
        let g = Conjugation1P;
        DoubledOperator {
            tl: g.conjugate_matrix(&x.br),
            tr: g.conjugate_matrix(&x.bl),
            bl: g.conjugate_matrix(&x.tr),
            br: g.conjugate_matrix(&x.tl),
        }
    }
}

/// `[[tl, tr], [bl, br]]` acting on `(f, g)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DoubledOperator {
    pub tl: CMat,
    pub tr: CMat,
    pub bl: CMat,
    pub br: CMat,
}

impl DoubledOperator {
    pub fn block_diagonal(top: CMat, bottom: CMat) -> Self {
        let d = top.nrows();
        Self { tl: top, tr: CMat::zeros(d, d), bl: CMat::zeros(d, d), br: bottom }
    }

    pub fn identity(window: ModeWindow) -> Self {
        let d = window.dim();
        Self::block_diagonal(CMat::identity(d, d), CMat::identity(d, d))
    }

    pub fn apply(&self, h: &DoubledVector) -> DoubledVector {
        DoubledVector {
            top: &self.tl * &h.top + &self.tr * &h.bottom,
            bottom: &self.bl * &h.top + &self.br * &h.bottom,
        }
    }

    pub fn mul(&self, o: &Self) -> Self {
        Self {
            tl: &self.tl * &o.tl + &self.tr * &o.bl,
            tr: &self.tl * &o.tr + &self.tr * &o.br,
            bl: &self.bl * &o.tl + &self.br * &o.bl,
            br: &self.bl * &o.tr + &self.br * &o.br,
        }
    }

    pub fn adjoint(&self) -> Self {
        Self { tl: self.tl.adjoint(), tr: self.bl.adjoint(), bl: self.tr.adjoint(), br: self.br.adjoint() }
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self { tl: &self.tl * s, tr: &self.tr * s, bl: &self.bl * s, br: &self.br * s }
    }

    pub fn add(&self, o: &Self) -> Self {
        Self { tl: &self.tl + &o.tl, tr: &self.tr + &o.tr, bl: &self.bl + &o.bl, br: &self.br + &o.br }
    }

    pub fn distance(&self, o: &Self) -> f64 {
        [
            max_abs_diff(&self.tl, &o.tl),
            max_abs_diff(&self.tr, &o.tr),
            max_abs_diff(&self.bl, &o.bl),
            max_abs_diff(&self.br, &o.br),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    pub fn commutator_residual(&self, o: &Self) -> f64 {
        self.mul(o).distance(&o.mul(self))
    }

    /// `exp(t·self)`; block-diagonal operators are exponentiated per block.
    pub fn exp_scaled(&self, t: Complex64) -> Self {
        let zero_off = self.tr.iter().chain(self.bl.iter()).all(|z| *z == Complex64::new(0.0, 0.0));
        if zero_off {
            return Self::block_diagonal(expm(&(&self.tl * t)), expm(&(&self.br * t)));
        }
        let d = self.tl.nrows();
        let mut full = CMat::zeros(2 * d, 2 * d);
        full.view_mut((0, 0), (d, d)).copy_from(&self.tl);
        full.view_mut((0, d), (d, d)).copy_from(&self.tr);
        full.view_mut((d, 0), (d, d)).copy_from(&self.bl);
        full.view_mut((d, d), (d, d)).copy_from(&self.br);
        let e = expm(&(full * t));
        Self {
            tl: e.view((0, 0), (d, d)).into_owned(),
            tr: e.view((0, d), (d, d)).into_owned(),
            bl: e.view((d, 0), (d, d)).into_owned(),
            br: e.view((d, d), (d, d)).into_owned(),
        }
    }
}

/// A projection `P` on `H₀` and its doubled basis projection
/// `Π(f, g) = (Pf, γP⊥γ g)`.
#[derive(Debug, Clone)]
pub struct BasisProjectionData {
    pub p: OneParticleOperator,
}

impl BasisProjectionData {
    pub fn new(p: OneParticleOperator) -> Result<Self> {
        let residual = p.projection_residual();
        if residual > 1e-12 {
            return Err(LabError::NotProjection { residual });
        }
        Ok(Self { p })
    }

    pub fn half_space(cut: HalfSpace, window: ModeWindow) -> Self {
        Self { p: cut.operator(window) }
    }

    pub fn pi(&self) -> DoubledOperator {
        let d = self.p.window().dim();
        let complement = CMat::identity(d, d) - self.p.matrix();
        DoubledOperator::block_diagonal(self.p.matrix().clone(), Conjugation1P.conjugate_matrix(&complement))
    }

    /// `max(‖Π² − Π‖, ‖Π* − Π‖, ‖Π + ΓΠΓ − 1‖)` entrywise.
    pub fn basis_projection_residual(&self) -> f64 {
        let pi = self.pi();
        let id = DoubledOperator::identity(self.p.window());
        let sum = pi.add(&DoubledConjugation.conjugate(&pi));
        pi.mul(&pi).distance(&pi).max(pi.adjoint().distance(&pi)).max(sum.distance(&id))
    }
}

/// `φ(U) = diag(U, γUγ)`.
pub fn bogoljubov_double(u: &OneParticleOperator) -> Result<DoubledOperator> {
    u.check_unitary(Tolerances::default().algebraic)?;
    let phi = DoubledOperator::block_diagonal(u.matrix().clone(), Conjugation1P.conjugate_matrix(u.matrix()));
    let residual = DoubledConjugation.conjugate(&phi).distance(&phi);
    if residual > 1e-12 {
        return Err(LabError::SymmetryViolation { what: "ΓφΓ = φ", residual });
    }
    Ok(phi)
}

/// `φ(A) = diag(A, −A)` for selfadjoint `A` with `γAγ = A`.
pub fn antisym_double(a: &OneParticleOperator) -> Result<DoubledOperator> {
    let tol = Tolerances::default().algebraic;
    let h = a.hermiticity_residual();
    if h > tol {
        return Err(LabError::SymmetryViolation { what: "A = A*", residual: h });
    }
    let g = a.conjugation_residual();
    if g > tol {
        return Err(LabError::SymmetryViolation { what: "γAγ = A", residual: g });
    }
    let phi = DoubledOperator::block_diagonal(a.matrix().clone(), -a.matrix());
    let residual = DoubledConjugation.conjugate(&phi).distance(&phi.scale(Complex64::new(-1.0, 0.0)));
    if residual > tol {
        return Err(LabError::SymmetryViolation { what: "ΓφΓ = −φ", residual });
    }
    Ok(phi)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImplementabilityReport {
    pub hs: HsNorms,
    pub range_index: IndexReport,
    pub complement_index: IndexReport,
    /// `ind(PUP|ran P) + ind(P⊥UP⊥|ran P⊥)`.
    pub index_sum: i64,
    /// Both off-diagonal norms settled under window growth.
    pub implementable: bool,
}

pub fn implementability_check<T: WindowedOperator + ?Sized>(
    u: &T,
    cut: HalfSpace,
    window: Option<ModeWindow>,
) -> Result<ImplementabilityReport> {
    let tol = Tolerances::default();
    let range_index = side_index(u, cut, Side::Range, window, &tol)?;
    let complement_index = side_index(u, cut, Side::Complement, window, &tol)?;
    let base = ModeWindow::new(range_index.windows[0])?;
    let hs = hs_offdiag_norms(u, cut, base)?;
    let index_sum = range_index.q + complement_index.q;
    if hs.converged && index_sum != 0 {
        return Err(LabError::Consistency { what: "index sum", left: index_sum as f64, right: 0.0 });
    }
    Ok(ImplementabilityReport { hs, range_index, complement_index, index_sum, implementable: hs.converged })
}

/// `exp(i t φ(A))`.
pub fn exp_doubled(phi: &DoubledOperator, t: f64) -> DoubledOperator {
    phi.exp_scaled(I * t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;
    use crate::mode_space::{multiplication_operator, regular_rep, LoopFunction, TrigPoly, UnitaryExpr};
    use crate::sampling;
    use proptest::prelude::*;

    fn w(n: usize) -> ModeWindow {
        ModeWindow::new(n).unwrap()
    }

    #[test]
    fn doubled_conjugation_is_an_involution() {
        let win = w(3);
        let mut rng = sampling::rng(4);
        for _ in 0..5 {
            let m = sampling::complex_matrix(&mut rng, win.dim(), 2);
            let h = DoubledVector::new(m.column(0).into_owned(), m.column(1).into_owned()).unwrap();
            let gg = DoubledConjugation.apply(&DoubledConjugation.apply(&h));
            assert_eq!(gg, h);
            // antilinear
            let lhs = DoubledConjugation.apply(&h.scale(I));
            let rhs = DoubledConjugation.apply(&h).scale(-I);
            assert!((lhs.add(&rhs.scale(c(-1.0, 0.0)))).norm_sq() < 1e-28);
        }
    }

    #[test]
    fn basis_projection_identities() {
        for n in [2, 5, 8] {
            let b = BasisProjectionData::half_space(HalfSpace::nonnegative(), w(n));
            assert!(b.basis_projection_residual() < 1e-12);
            let b = BasisProjectionData::half_space(HalfSpace { start: 1 }, w(n));
            assert!(b.basis_projection_residual() < 1e-12);
        }
    }

    #[test]
    fn identity_and_scalar_doubles() {
        let win = w(4);
        let id = bogoljubov_double(&OneParticleOperator::identity(win)).unwrap();
        assert_eq!(id, DoubledOperator::identity(win));
        let lambda = c(0.6, 0.8);
        let u = OneParticleOperator::identity(win).scale(lambda);
        let phi = bogoljubov_double(&u).unwrap();
        assert!((phi.tl[(0, 0)] - lambda).norm() < 1e-15);
        assert!((phi.br[(0, 0)] - lambda.conj()).norm() < 1e-15);
        let pi = BasisProjectionData::half_space(HalfSpace::nonnegative(), win).pi();
        assert_eq!(phi.commutator_residual(&pi), 0.0);
    }

    #[test]
    fn shift_double_is_bogoljubov() {
        let v = multiplication_operator(&LoopFunction::monomial(1), w(5)).unwrap();
        let phi = bogoljubov_double(&v).unwrap();
        assert_eq!(DoubledConjugation.conjugate(&phi), phi);
    }

    #[test]
    fn non_unitary_rejected() {
        let u = OneParticleOperator::identity(w(3)).scale(c(2.0, 0.0));
        assert!(matches!(bogoljubov_double(&u), Err(LabError::NotUnitary { .. })));
    }

    #[test]
    fn antisym_double_examples() {
        let win = w(6);
        let zero = TrigPoly::zero().operator(win).unwrap();
        let phi0 = antisym_double(&zero).unwrap();
        assert!(phi0.distance(&DoubledOperator::identity(win).scale(c(0.0, 0.0))) == 0.0);
        let a = TrigPoly::cos_sin(1, 2.0, 0.0).operator(win).unwrap();
        let phi = antisym_double(&a).unwrap();
        assert_eq!(DoubledConjugation.conjugate(&phi), phi.scale(c(-1.0, 0.0)));
        let lhs = exp_doubled(&phi, 0.3);
        let eta = OneParticleOperator::from_matrix(win, expm(&(a.matrix() * (I * 0.3)))).unwrap();
        let rhs = DoubledOperator::block_diagonal(eta.matrix().clone(), Conjugation1P.conjugate_matrix(eta.matrix()));
        assert!(lhs.distance(&rhs) < 1e-12);
        let bad = OneParticleOperator::from_matrix(win, a.matrix() * I).unwrap();
        assert!(matches!(antisym_double(&bad), Err(LabError::SymmetryViolation { .. })));
    }

    #[test]
    fn implementability_of_shift() {
        let r = implementability_check(&LoopFunction::monomial(1), HalfSpace::nonnegative(), None).unwrap();
        assert_eq!((r.range_index.q, r.complement_index.q, r.index_sum), (1, -1, 0));
        assert!((r.hs.p_u_pperp - 1.0).abs() < 1e-14 && r.hs.pperp_u_p == 0.0);
        assert!(r.implementable);
    }

    #[test]
    fn implementability_of_diagonal_and_winding_two() {
        let r = implementability_check(&UnitaryExpr::Regular(0.0, 1.0), HalfSpace::nonnegative(), Some(w(6))).unwrap();
        assert_eq!((r.hs.p_u_pperp, r.hs.pperp_u_p, r.index_sum), (0.0, 0.0, 0));
        let f = LoopFunction::new(2, TrigPoly::cos_sin(1, 0.3, -0.2));
        let r = implementability_check(&f, HalfSpace::nonnegative(), None).unwrap();
        assert_eq!((r.range_index.q, r.index_sum), (2, 0));
    }

    #[test]
    fn commutes_with_pi_iff_commutes_with_p() {
        let win = w(6);
        let cut = HalfSpace::nonnegative();
        let p = cut.operator(win);
        let pi = BasisProjectionData::half_space(cut, win).pi();
        let v = multiplication_operator(&LoopFunction::monomial(1), win).unwrap();
        let candidates = vec![
            regular_rep(c(0.0, 1.0), win).unwrap(),
            OneParticleOperator::identity(win).scale(c(0.6, -0.8)),
            v.clone(),
            v.adjoint(),
        ];
        for u in candidates {
            let phi = bogoljubov_double(&u).unwrap();
            let a = u.commutator_residual(&p).unwrap() < 1e-12;
            let b = phi.commutator_residual(&pi) < 1e-12;
            assert_eq!(a, b);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn doubling_is_multiplicative_inside_margins(seed in any::<u64>()) {
            let mut rng = sampling::rng(seed);
            let f = sampling::loop_function(&mut rng, -2..=2, 2, 0.3);
            let g = sampling::loop_function(&mut rng, -2..=2, 2, 0.3);
            let (bf, bg) = (f.total_band(), g.total_band());
            let win = w(2 * (bf + bg) + 2);
            let uf = multiplication_operator(&f, win).unwrap();
            let ug = multiplication_operator(&g, win).unwrap();
            let ufg = multiplication_operator(&f.mul(&g), win).unwrap();
            let lhs = DoubledOperator::block_diagonal(ufg.matrix().clone(), Conjugation1P.conjugate_matrix(ufg.matrix()));
            let prod = uf.mul(&ug).unwrap();
            let rhs = DoubledOperator::block_diagonal(prod.matrix().clone(), Conjugation1P.conjugate_matrix(prod.matrix()));
            let r = (win.n_max() - bf - bg) as i64;
            let n = win.n_max() as i64;
            for blk in [(&lhs.tl, &rhs.tl), (&lhs.br, &rhs.br)] {
                for m in -r..=r {
                    for k in -r..=r {
                        let (i, j) = ((m + n) as usize, (k + n) as usize);
                        prop_assert!((blk.0[(i, j)] - blk.1[(i, j)]).norm() < 1e-10);
                    }
                }
            }
        }
    }
}
