//! Dense complex linear algebra shared by the one-particle layer and the
//! matrix-algebra engine.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{LabError, Result};

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

#[inline]
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Unit complex number e^{iθ}.
#[inline]
pub fn cis(theta: f64) -> Complex64 {
    Complex64::from_polar(1.0, theta)
}

/// Largest entrywise modulus of `a - b`.
pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

pub fn max_abs(a: &CMat) -> f64 {
    a.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

pub fn frobenius(a: &CMat) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

fn to_faer(a: &CMat) -> faer::Mat<Complex64> {
    faer::Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)])
}

fn from_faer(m: faer::MatRef<'_, Complex64>) -> CMat {
    CMat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

/// Singular values in nonincreasing order.
pub fn singular_values(a: &CMat) -> Vec<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Vec::new();
    }
    to_faer(a).singular_values().expect("SVD converges")
}

/// `(σ, U, V)` with `σ` nonincreasing; `thin` keeps `min(m, n)` columns.
fn svd(a: &CMat, thin: bool) -> (Vec<f64>, CMat, CMat) {
    let m = to_faer(a);
    let d = if thin { m.thin_svd() } else { m.svd() }.expect("SVD converges");
    let s = d.S().column_vector().iter().map(|z| z.re).collect();
    (s, from_faer(d.U()), from_faer(d.V()))
}

/// Rank of a matrix decided by a singular-value gap: values below `zero`
/// count as zero, values at or above `gap` as nonzero, anything in between
/// makes the decision indeterminate.
#[derive(Debug, Clone, PartialEq)]
pub struct RankDecision {
    pub rank: usize,
    pub singular_values: Vec<f64>,
}

pub fn gap_rank(a: &CMat, zero: f64, gap: f64) -> Result<RankDecision> {
    let sv = singular_values(a);
    let mut rank = 0;
    for &s in &sv {
        if s >= gap {
            rank += 1;
        } else if s >= zero {
            return Err(LabError::IndeterminateRank { value: s, zero, gap });
        }
    }
    Ok(RankDecision { rank, singular_values: sv })
}

/// Orthonormal basis (as columns) of the null space of `a`, using the
/// relative threshold `tol · max(1, σ_max)`.
pub fn null_space(a: &CMat, tol: f64) -> CMat {
    let n = a.ncols();
    if n == 0 {
        return CMat::zeros(0, 0);
    }
    if a.nrows() == 0 {
        return CMat::identity(n, n);
    }
    let (sv, _, v) = svd(a, false);
    let smax = sv.first().copied().unwrap_or(0.0);
    let thresh = tol * smax.max(1.0);
    // right vectors past min(m, n) have singular value zero
    let cols: Vec<CVec> = (0..n).filter(|&i| sv.get(i).is_none_or(|&s| s <= thresh)).map(|i| v.column(i).into_owned()).collect();
    if cols.is_empty() {
        CMat::zeros(n, 0)
    } else {
        CMat::from_columns(&cols)
    }
}

/// Column-major flattening of a square matrix into a vector.
pub fn vectorize(m: &CMat) -> CVec {
    CVec::from_column_slice(m.as_slice())
}

pub fn unvectorize(v: &CVec, d: usize) -> CMat {
    CMat::from_column_slice(d, d, v.as_slice())
}

/// A linear subspace of C^n held as an orthonormal column basis.
#[derive(Debug, Clone)]
pub struct Subspace {
    basis: CMat,
}

impl Subspace {
    pub fn zero(n: usize) -> Self {
        Self { basis: CMat::zeros(n, 0) }
    }

    /// Span of the given vectors, rank decided relative to the largest
    /// singular value.
    pub fn span(n: usize, vectors: &[CVec], tol: f64) -> Self {
        if vectors.is_empty() {
            return Self::zero(n);
        }
        let m = CMat::from_columns(vectors);
        let (sv, u, _) = svd(&m, true);
        let smax = sv.first().copied().unwrap_or(0.0);
        if smax == 0.0 {
            return Self::zero(n);
        }
        let cols: Vec<CVec> =
            sv.iter().enumerate().filter(|(_, &s)| s > tol * smax.max(1.0)).map(|(i, _)| u.column(i).into_owned()).collect();
        if cols.is_empty() {
            Self::zero(n)
        } else {
            Self { basis: CMat::from_columns(&cols) }
        }
    }

    pub fn from_orthonormal(basis: CMat) -> Self {
        Self { basis }
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn ambient(&self) -> usize {
        self.basis.nrows()
    }

    pub fn basis(&self) -> &CMat {
        &self.basis
    }

    pub fn vectors(&self) -> Vec<CVec> {
        self.basis.column_iter().map(|c| c.into_owned()).collect()
    }

    pub fn project(&self, v: &CVec) -> CVec {
        if self.dim() == 0 {
            return CVec::zeros(v.len());
        }
        &self.basis * (self.basis.adjoint() * v)
    }

    /// Distance from `v` to the subspace.
    pub fn residual(&self, v: &CVec) -> f64 {
        (v - self.project(v)).norm()
    }

    /// Largest residual of `other`'s basis vectors against `self`.
    pub fn containment_residual(&self, other: &Subspace) -> f64 {
        other
            .basis
            .column_iter()
            .map(|c| self.residual(&c.into_owned()))
            .fold(0.0, f64::max)
    }

    pub fn contains(&self, other: &Subspace, tol: f64) -> bool {
        self.containment_residual(other) <= tol
    }

    /// Mutual containment with matching dimension.
    pub fn equals(&self, other: &Subspace, tol: f64) -> bool {
        self.dim() == other.dim() && self.contains(other, tol) && other.contains(self, tol)
    }

    pub fn intersect(&self, other: &Subspace, tol: f64) -> Subspace {
        let n = self.ambient();
        if self.dim() == 0 || other.dim() == 0 {
            return Self::zero(n);
        }
        let ka = self.dim();
        let mut stacked = CMat::zeros(n, ka + other.dim());
        stacked.view_mut((0, 0), (n, ka)).copy_from(&self.basis);
        stacked
            .view_mut((0, ka), (n, other.dim()))
            .copy_from(&(-other.basis.clone()));
        let ns = null_space(&stacked, tol);
        let vecs: Vec<CVec> = ns
            .column_iter()
            .map(|x| &self.basis * x.rows(0, ka))
            .collect();
        Self::span(n, &vecs, tol)
    }
}

/// Dense matrix exponential by scaling and squaring with a Taylor core.
pub fn expm(a: &CMat) -> CMat {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "expm needs a square matrix");
    let norm1 = (0..n)
        .map(|j| a.column(j).iter().map(|x| x.norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let squarings = if norm1 > 0.5 { (norm1 / 0.5).log2().ceil() as u32 } else { 0 };
    let scaled = a * c(0.5f64.powi(squarings as i32), 0.0);
    let mut result = CMat::identity(n, n);
    let mut term = CMat::identity(n, n);
    for k in 1..=40 {
        term = &term * &scaled * c(1.0 / k as f64, 0.0);
        result += &term;
        if max_abs(&term) < 1e-18 {
            break;
        }
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

pub fn is_unitary(u: &CMat, tol: f64) -> bool {
    let n = u.nrows();
    max_abs_diff(&(u * u.adjoint()), &CMat::identity(n, n)) <= tol
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling;
    use rand::Rng;

    #[test]
    fn svd_reconstructs_low_rank_matrices() {
        let mut rng = sampling::rng(3);
        for t in 0..200 {
            let (r, k) = (rng.random_range(5..60), rng.random_range(2..30));
            let rank = rng.random_range(1..=(k - 1).min(r));
            let mut right = sampling::complex_matrix(&mut rng, rank, k);
            if t % 2 == 0 {
                let col = right.column(0).into_owned();
                right.set_column(1, &col);
            }
            let m = sampling::complex_matrix(&mut rng, r, rank) * right;
            let (sv, u, v) = svd(&m, true);
            let s = CMat::from_diagonal(&CVec::from_iterator(sv.len(), sv.iter().map(|&x| c(x, 0.0))));
            assert!(max_abs_diff(&(&u * s * v.adjoint()), &m) < 1e-10);
            assert_eq!(sv.iter().filter(|&&x| x > 1e-9 * sv[0]).count(), rank);
            let ns = null_space(&m, 1e-9);
            assert_eq!(ns.ncols(), k - rank);
            assert!(max_abs(&(&m * &ns)) < 1e-9);
        }
    }

    #[test]
    fn span_of_repeated_projections() {
        // diagonal projections with repeated copies span a space of their count
        let d = 10;
        let mut vectors = vec![vectorize(&CMat::identity(d, d))];
        for n in 0..5 {
            let e = CMat::from_fn(d, d, |i, j| if i == j && i / 2 == n { ONE } else { ZERO });
            vectors.push(vectorize(&e));
            vectors.push(vectorize(&e.adjoint()));
        }
        assert_eq!(Subspace::span(d * d, &vectors, 1e-9).dim(), 5);
    }

    #[test]
    fn expm_of_rotation_generator() {
        // exp(t·[[0,-1],[1,0]]) is a rotation by t
        let t = 0.7;
        let g = CMat::from_row_slice(2, 2, &[ZERO, c(-t, 0.0), c(t, 0.0), ZERO]);
        let r = expm(&g);
        let want = CMat::from_row_slice(
            2,
            2,
            &[c(t.cos(), 0.0), c(-t.sin(), 0.0), c(t.sin(), 0.0), c(t.cos(), 0.0)],
        );
        assert!(max_abs_diff(&r, &want) < 1e-14);
    }

    #[test]
    fn expm_large_norm_diagonal() {
        let d = CMat::from_diagonal(&CVec::from_vec(vec![c(0.0, 30.0), c(-2.0, 0.0)]));
        let e = expm(&d);
        assert!((e[(0, 0)] - cis(30.0)).norm() < 1e-12);
        assert!((e[(1, 1)] - c((-2.0f64).exp(), 0.0)).norm() < 1e-14);
    }

    #[test]
    fn gap_rank_flags_middle_values() {
        let m = CMat::from_diagonal(&CVec::from_vec(vec![ONE, c(1e-5, 0.0)]));
        assert!(matches!(gap_rank(&m, 1e-7, 1e-3), Err(LabError::IndeterminateRank { .. })));
        let m = CMat::from_diagonal(&CVec::from_vec(vec![ONE, c(1e-12, 0.0)]));
        assert_eq!(gap_rank(&m, 1e-7, 1e-3).unwrap().rank, 1);
    }

    #[test]
    fn subspace_intersection() {
        let e = |i: usize| {
            let mut v = CVec::zeros(3);
            v[i] = ONE;
            v
        };
        let xy = Subspace::span(3, &[e(0), e(1)], 1e-12);
        let yz = Subspace::span(3, &[e(1), e(2)], 1e-12);
        let y = xy.intersect(&yz, 1e-10);
        assert_eq!(y.dim(), 1);
        assert!(y.residual(&e(1)) < 1e-12);
    }

    #[test]
    fn null_space_of_wide_matrix() {
        let a = CMat::from_row_slice(1, 3, &[ONE, ONE, ZERO]);
        let ns = null_space(&a, 1e-12);
        assert_eq!(ns.ncols(), 2);
        assert!(max_abs(&(&a * &ns)) < 1e-14);
    }
}
