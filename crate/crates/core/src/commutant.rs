//! Finite-dimensional matrix algebras: generated *-algebras, commutants,
//! centers, relative commutants and spectral grading in clock-and-shift
//! models.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::linalg::{cis, max_abs_diff, null_space, unvectorize, vectorize, CMat, Subspace, ONE, ZERO};

/// Rank and subspace tolerance for algebra computations.
pub const ALGEBRA_TOL: f64 = 1e-9;

/// A unital *-subalgebra of `M_d` with an orthonormal (Hilbert–Schmidt)
/// basis.
#[derive(Debug, Clone)]
pub struct MatrixAlgebra {
    d: usize,
    generators: Vec<CMat>,
    basis: Subspace,
}

fn check_square(d: usize, mats: &[CMat]) -> Result<()> {
    if mats.iter().any(|m| m.nrows() != d || m.ncols() != d) {
        return Err(LabError::InvalidArgument(format!("generators must be {d}×{d}")));
    }
    Ok(())
}

/// Smallest unital *-algebra containing `gens`: the span of words, grown by
/// left multiplication with generators and their adjoints until the
/// dimension stops changing.
pub fn generated_algebra(gens: &[CMat], d: usize) -> Result<MatrixAlgebra> {
    check_square(d, gens)?;
    let mut letters: Vec<CMat> = gens.to_vec();
    letters.extend(gens.iter().map(|g| g.adjoint()));
    let mut span = Subspace::span(d * d, &[vectorize(&CMat::identity(d, d))], ALGEBRA_TOL);
    loop {
        let before = span.dim();
        let mut vectors = span.vectors();
        for b in span.vectors() {
            let m = unvectorize(&b, d);
            for g in &letters {
                vectors.push(vectorize(&(g * &m)));
            }
        }
        span = Subspace::span(d * d, &vectors, ALGEBRA_TOL);
        if span.dim() > d * d {
            return Err(LabError::Consistency { what: "algebra dimension", left: span.dim() as f64, right: (d * d) as f64 });
        }
        if span.dim() == before {
            break;
        }
    }
    Ok(MatrixAlgebra { d, generators: gens.to_vec(), basis: span })
}

impl MatrixAlgebra {
    pub fn ambient(&self) -> usize {
        self.d
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn generators(&self) -> &[CMat] {
        &self.generators
    }

    pub fn subspace(&self) -> &Subspace {
        &self.basis
    }

    pub fn basis(&self) -> Vec<CMat> {
        self.basis.vectors().iter().map(|v| unvectorize(v, self.d)).collect()
    }

    pub fn contains(&self, m: &CMat) -> bool {
        self.basis.residual(&vectorize(m)) < ALGEBRA_TOL
    }

    /// Largest reconstruction error of a basis product.
    pub fn closure_residual(&self) -> f64 {
        let basis = self.basis();
        let mut worst: f64 = 0.0;
        for a in &basis {
            for b in &basis {
                worst = worst.max(self.basis.residual(&vectorize(&(a * b))));
            }
        }
        worst
    }

    pub fn equals(&self, other: &Self) -> bool {
        self.basis.equals(&other.basis, ALGEBRA_TOL)
    }

    pub fn is_abelian(&self) -> bool {
        let basis = self.basis();
        basis.iter().all(|a| basis.iter().all(|b| max_abs_diff(&(a * b), &(b * a)) < ALGEBRA_TOL))
    }
}

fn from_subspace(d: usize, basis: Subspace) -> MatrixAlgebra {
    let generators = basis.vectors().iter().map(|v| unvectorize(v, d)).collect();
    MatrixAlgebra { d, generators, basis }
}

/// `{X : [X, G] = 0 for every generator G and its adjoint}`.
pub fn commutant(alg: &MatrixAlgebra) -> MatrixAlgebra {
    let d = alg.d;
    let id = CMat::identity(d, d);
    let mut gens = alg.basis();
    if gens.is_empty() {
        gens.push(id.clone());
    }
    // vec(GX − XG) = (I⊗G − Gᵀ⊗I) vec X
    let mut system = CMat::zeros(d * d * gens.len(), d * d);
    for (i, g) in gens.iter().enumerate() {
        let block = id.kronecker(g) - g.transpose().kronecker(&id);
        system.view_mut((i * d * d, 0), (d * d, d * d)).copy_from(&block);
    }
    let kernel = null_space(&system, ALGEBRA_TOL);
    let vectors: Vec<_> = kernel.column_iter().map(|c| c.into_owned()).collect();
    from_subspace(d, Subspace::span(d * d, &vectors, ALGEBRA_TOL))
}

pub fn intersection(a: &MatrixAlgebra, b: &MatrixAlgebra) -> Result<MatrixAlgebra> {
    if a.d != b.d {
        return Err(LabError::InvalidArgument("ambient dimensions differ".into()));
    }
    Ok(from_subspace(a.d, a.basis.intersect(&b.basis, ALGEBRA_TOL)))
}

/// `Z(A) = A ∩ A′`.
pub fn center(alg: &MatrixAlgebra) -> MatrixAlgebra {
    from_subspace(alg.d, alg.basis.intersect(&commutant(alg).basis, ALGEBRA_TOL))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CenterReport {
    pub dim_a: usize,
    pub dim_f: usize,
    pub dim_center: usize,
    pub dim_relative_commutant: usize,
    /// `Z(A) = A′ ∩ F` by mutual containment.
    pub center_equals_relative_commutant: bool,
    /// `A ⊆ F`.
    pub a_in_f: bool,
    /// `C*(U) ⊆ Z(A)` when a gauge unitary is supplied.
    pub gauge_in_center: Option<bool>,
    pub a_equals_center: bool,
}

pub fn verify_center_identity(a_gens: &[CMat], f_gens: &[CMat], d: usize, gauge: Option<&CMat>) -> Result<CenterReport> {
    let a = generated_algebra(a_gens, d)?;
    let f = generated_algebra(f_gens, d)?;
    let a_in_f = f.basis.contains(&a.basis, ALGEBRA_TOL);
    if !a_in_f {
        return Err(LabError::InvalidArgument("A is not contained in F".into()));
    }
    let z = center(&a);
    let rel = intersection(&commutant(&a), &f)?;
    let gauge_in_center = match gauge {
        Some(u) => Some(z.basis.contains(&generated_algebra(std::slice::from_ref(u), d)?.basis, ALGEBRA_TOL)),
        None => None,
    };
    Ok(CenterReport {
        dim_a: a.dim(),
        dim_f: f.dim(),
        dim_center: z.dim(),
        dim_relative_commutant: rel.dim(),
        center_equals_relative_commutant: z.equals(&rel),
        a_in_f,
        gauge_in_center,
        a_equals_center: a.equals(&z),
    })
}

/// `U = diag(ωⁿ) ⊗ 1_K`, `V = shift ⊗ 1_K` on `C^M ⊗ C^K`, with
/// `UVU⁻¹ = ωV`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClockShiftModel {
    pub modulus: usize,
    pub multiplicity: usize,
}

impl ClockShiftModel {
    pub fn new(modulus: usize, multiplicity: usize) -> Result<Self> {
        if modulus < 2 || multiplicity < 1 {
            return Err(LabError::InvalidArgument("need M ≥ 2 and K ≥ 1".into()));
        }
        Ok(Self { modulus, multiplicity })
    }

    pub fn dim(&self) -> usize {
        self.modulus * self.multiplicity
    }

    pub fn omega(&self) -> num_complex::Complex64 {
        cis(std::f64::consts::TAU / self.modulus as f64)
    }

    fn lift(&self, m: &CMat) -> CMat {
        let k = self.multiplicity;
        m.kronecker(&CMat::identity(k, k))
    }

    pub fn clock(&self) -> CMat {
        let w = self.omega();
        self.lift(&CMat::from_fn(self.modulus, self.modulus, |i, j| if i == j { w.powi(i as i32) } else { ZERO }))
    }

    /// `V e_n = e_{n+1 mod M}`.
    pub fn shift(&self) -> CMat {
        let m = self.modulus;
        self.lift(&CMat::from_fn(m, m, |i, j| if i == (j + 1) % m { ONE } else { ZERO }))
    }

    /// `1_M ⊗ E_ij` for the multiplicity factor.
    pub fn multiplicity_units(&self) -> Vec<CMat> {
        let k = self.multiplicity;
        let mut out = Vec::new();
        for i in 0..k {
            for j in 0..k {
                let e = CMat::from_fn(k, k, |a, b| if a == i && b == j { ONE } else { ZERO });
                out.push(CMat::identity(self.modulus, self.modulus).kronecker(&e));
            }
        }
        out
    }

    /// Spectral projections `E_n` of the clock.
    pub fn spectral_projections(&self) -> Vec<CMat> {
        (0..self.modulus)
            .map(|n| {
                let e = CMat::from_fn(self.modulus, self.modulus, |i, j| if i == n && j == n { ONE } else { ZERO });
                self.lift(&e)
            })
            .collect()
    }

    /// Generators of `F = C*(U, V, 1 ⊗ M_K)`, the full matrix algebra.
    pub fn full_generators(&self) -> Vec<CMat> {
        let mut g = vec![self.clock(), self.shift()];
        if self.multiplicity > 1 {
            g.extend(self.multiplicity_units());
        }
        g
    }

    /// Generators of the fixed-point algebra `A = U′ ∩ F`.
    pub fn fixed_point_generators(&self) -> Vec<CMat> {
        let u = generated_algebra(&[self.clock()], self.dim()).expect("square");
        commutant(&u).basis()
    }

    pub fn covariance_residual(&self) -> f64 {
        let (u, v) = (self.clock(), self.shift());
        let lhs = &u * &v * u.adjoint();
        max_abs_diff(&lhs, &(v * self.omega()))
    }

    /// Degrees `n ∈ [−M/2, M/2)`.
    pub fn degrees(&self) -> Vec<i64> {
        let m = self.modulus as i64;
        (-(m / 2)..m - m / 2).collect()
    }
}

fn matrix_power(m: &CMat, n: i64) -> CMat {
    let base = if n < 0 { m.adjoint() } else { m.clone() };
    let mut out = CMat::identity(m.nrows(), m.ncols());
    for _ in 0..n.unsigned_abs() {
        out = &out * &base;
    }
    out
}

/// `Πₙ(F) = (1/M) Σ_k ω^{−nk} U^k F U^{−k}`.
pub fn spectral_component(f: &CMat, n: i64, model: &ClockShiftModel) -> Result<CMat> {
    let d = model.dim();
    if f.nrows() != d || f.ncols() != d {
        return Err(LabError::InvalidArgument(format!("element must be {d}×{d}")));
    }
    let m = model.modulus as i64;
    let u = model.clock();
    let w = model.omega();
    let mut acc = CMat::zeros(d, d);
    for k in 0..m {
        let uk = matrix_power(&u, k);
        acc += (&uk * f * uk.adjoint()) * w.powi((-n * k).rem_euclid(m) as i32);
    }
    Ok(acc / crate::linalg::c(m as f64, 0.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradingReport {
    /// `‖Σ Πₙ(F) − F‖`.
    pub reconstruction: f64,
    /// Largest `‖[Πₙ(F)V⁻ⁿ, U]‖`.
    pub fixed_point: f64,
    /// Largest `‖ΠₙΠₘ(F) − δₙₘΠₙ(F)‖`.
    pub orthogonality: f64,
}

impl GradingReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.reconstruction <= tol && self.fixed_point <= tol && self.orthogonality <= tol
    }
}

pub fn grading_check(f: &CMat, model: &ClockShiftModel) -> Result<GradingReport> {
    let u = model.clock();
    let v = model.shift();
    let degrees = model.degrees();
    let parts: Vec<CMat> = degrees.iter().map(|&n| spectral_component(f, n, model)).collect::<Result<_>>()?;
    let sum = parts.iter().fold(CMat::zeros(f.nrows(), f.ncols()), |acc, p| acc + p);
    let reconstruction = max_abs_diff(&sum, f);
    let mut fixed_point: f64 = 0.0;
    let mut orthogonality: f64 = 0.0;
    for (i, &n) in degrees.iter().enumerate() {
        let a = &parts[i] * matrix_power(&v, -n);
        fixed_point = fixed_point.max(max_abs_diff(&(&a * &u), &(&u * &a)));
        for (j, part) in parts.iter().enumerate() {
            let twice = spectral_component(part, n, model)?;
            let want = if i == j { part.clone() } else { CMat::zeros(f.nrows(), f.ncols()) };
            orthogonality = orthogonality.max(max_abs_diff(&twice, &want));
        }
    }
    Ok(GradingReport { reconstruction, fixed_point, orthogonality })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;
    use crate::sampling;
    use proptest::prelude::*;

    fn diag(values: &[f64]) -> CMat {
        let d = values.len();
        CMat::from_fn(d, d, |i, j| if i == j { c(values[i], 0.0) } else { ZERO })
    }

    #[test]
    fn identity_generates_scalars() {
        assert_eq!(generated_algebra(&[CMat::identity(4, 4)], 4).unwrap().dim(), 1);
    }

    #[test]
    fn clock_and_shift_generate_everything() {
        let m = ClockShiftModel::new(5, 1).unwrap();
        assert!(m.covariance_residual() < 1e-14);
        let alg = generated_algebra(&[m.clock(), m.shift()], 5).unwrap();
        assert_eq!(alg.dim(), 25);
        assert!(alg.closure_residual() < 1e-9);
    }

    #[test]
    fn distinct_eigenvalues_generate_diagonals() {
        let alg = generated_algebra(&[diag(&[1.0, 2.0, 3.0])], 3).unwrap();
        assert_eq!(alg.dim(), 3);
        assert!(alg.is_abelian());
        let comm = commutant(&alg);
        assert!(comm.equals(&alg));
    }

    #[test]
    fn commutant_of_full_algebra_is_scalars() {
        let m = ClockShiftModel::new(4, 1).unwrap();
        let full = generated_algebra(&m.full_generators(), 4).unwrap();
        let comm = commutant(&full);
        assert_eq!(comm.dim(), 1);
        assert!(comm.contains(&CMat::identity(4, 4)));
    }

    #[test]
    fn multiplicity_model_commutant() {
        let m = ClockShiftModel::new(5, 2).unwrap();
        let a = generated_algebra(&m.fixed_point_generators(), m.dim()).unwrap();
        assert_eq!(a.dim(), 5 * 4);
        let comm = commutant(&a);
        assert_eq!(comm.dim(), 5);
        for e in m.spectral_projections() {
            assert!(comm.contains(&e));
        }
    }

    #[test]
    fn center_identity_cases() {
        // diagonals inside the full algebra
        let d = 5;
        let full = ClockShiftModel::new(d, 1).unwrap().full_generators();
        let r = verify_center_identity(&[diag(&[1.0, 2.0, 3.0, 4.0, 5.0])], &full, d, None).unwrap();
        assert!(r.center_equals_relative_commutant && r.a_equals_center);
        assert_eq!(r.dim_center, 5);

        // minimal case: A = C*(U) inside C*(U, V)
        let m = ClockShiftModel::new(5, 1).unwrap();
        let u = m.clock();
        let r = verify_center_identity(&[u.clone()], &m.full_generators(), 5, Some(&u)).unwrap();
        assert!(r.a_equals_center && r.center_equals_relative_commutant);
        assert_eq!(r.gauge_in_center, Some(true));

        // multiplicity: Z = span{E_n}
        let m = ClockShiftModel::new(4, 2).unwrap();
        let r = verify_center_identity(&m.fixed_point_generators(), &m.full_generators(), 8, Some(&m.clock())).unwrap();
        assert!(r.center_equals_relative_commutant && !r.a_equals_center);
        assert_eq!(r.dim_center, 4);
        let z = center(&generated_algebra(&m.fixed_point_generators(), 8).unwrap());
        let span = generated_algebra(&m.spectral_projections(), 8).unwrap();
        assert!(z.equals(&span));
    }

    #[test]
    fn shift_has_degree_one() {
        let m = ClockShiftModel::new(5, 1).unwrap();
        let v = m.shift();
        for n in m.degrees() {
            let p = spectral_component(&v, n, &m).unwrap();
            let want = if n == 1 { v.clone() } else { CMat::zeros(5, 5) };
            assert!(max_abs_diff(&p, &want) < 1e-12);
        }
        let a = m.clock();
        assert!(max_abs_diff(&spectral_component(&a, 0, &m).unwrap(), &a) < 1e-12);
    }

    #[test]
    fn random_elements_decompose() {
        let mut rng = sampling::rng(21);
        for (mm, k) in [(4, 1), (5, 1), (4, 2), (5, 2)] {
            let m = ClockShiftModel::new(mm, k).unwrap();
            let f = sampling::complex_matrix(&mut rng, m.dim(), m.dim());
            assert!(grading_check(&f, &m).unwrap().passes(1e-12));
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]

        #[test]
        fn double_commutant(seed in any::<u64>(), k in 1usize..=2, blocks in 1usize..=3) {
            let mut rng = sampling::rng(seed);
            // block-diagonal algebras with random unitary conjugation
            let d = k * blocks + 1;
            let mut gens: Vec<CMat> = Vec::new();
            for b in 0..blocks {
                let mut e = CMat::zeros(d, d);
                for i in 0..k {
                    e[(b * k + i, b * k + i)] = ONE;
                }
                gens.push(e);
            }
            let r = sampling::complex_matrix(&mut rng, d, d);
            let (q, _) = {
                let qr = (r.clone() + r.adjoint()).symmetric_eigen();
                (qr.eigenvectors, qr.eigenvalues)
            };
            let conj: Vec<CMat> = gens.iter().map(|g| &q * g * q.adjoint()).collect();
            let alg = generated_algebra(&conj, d).unwrap();
            let cc = commutant(&commutant(&alg));
            prop_assert!(cc.equals(&alg));
        }
    }
}
