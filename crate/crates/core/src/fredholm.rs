//! Charge index of Toeplitz compressions.
//!
//! Orientation: `q = dim coker − dim ker` of `P U P` on `ran P`, which gives
//! `q = +1` for the up-shift `ζ ↦ ζ` and matches the exponent in the Fock
//! gauge covariance `Φ(λ) Φ(U) Φ(λ)⁻¹ = λ^q Φ(U)`.
//!
//! Kernels are computed on tall compressions: domain modes whose image lies
//! entirely inside the exact part of the window, codomain everything the
//! domain can reach. The cokernel is the kernel of the same compression of
//! `U*`.

use serde::{Deserialize, Serialize};

use crate::config::Tolerances;
use crate::error::{LabError, Result};
use crate::linalg::{gap_rank, CMat};
use crate::mode_space::{HalfSpace, LoopFunction, ModeWindow, OneParticleOperator, UnitaryExpr, WindowedOperator};

/// Window enlargements used for the stability check.
pub const STABILITY_STEPS: [usize; 3] = [0, 4, 8];

/// Which side of the cut the compression acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    /// `P U P` on `ran P`.
    Range,
    /// `P⊥ U P⊥` on `ran P⊥`.
    Complement,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Compression {
    pub kernel_dim: usize,
    pub cokernel_dim: usize,
    /// Singular values of the compression of `U`, then of `U*`.
    pub singular_values: Vec<f64>,
}

impl Compression {
    pub fn q(&self) -> i64 {
        self.cokernel_dim as i64 - self.kernel_dim as i64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexReport {
    pub kernel_dim: usize,
    pub cokernel_dim: usize,
    pub q: i64,
    pub stable: bool,
    /// Windows at which the index was computed.
    pub windows: Vec<usize>,
    /// Singular values behind the rank decisions at the first window.
    pub singular_values: Vec<f64>,
}

fn block(u: &OneParticleOperator, rows: &[i64], cols: &[i64], adjoint: bool) -> CMat {
    CMat::from_fn(rows.len(), cols.len(), |i, j| {
        if adjoint {
            u.entry(cols[j], rows[i]).conj()
        } else {
            u.entry(rows[i], cols[j])
        }
    })
}

/// Kernel and cokernel of one half-line compression on a single window.
pub fn compression(u: &OneParticleOperator, cut: HalfSpace, side: Side, tol: &Tolerances) -> Result<Compression> {
    let n = u.window().n_max() as i64;
    let reach = u.margin().max(u.band()) as i64;
    let (domain, codomain): (Vec<i64>, Vec<i64>) = match side {
        Side::Range => ((cut.start..=n - reach).collect(), (cut.start..=n).collect()),
        Side::Complement => ((-n + reach..cut.start).collect(), (-n..cut.start).collect()),
    };
    if domain.len() <= reach.max(1) as usize {
        return Err(LabError::InsufficientWindow {
            required: (cut.start.unsigned_abs() as usize) + 2 * reach.max(1) as usize + 1,
            actual: n as usize,
        });
    }
    let forward = gap_rank(&block(u, &codomain, &domain, false), tol.rank_zero, tol.rank_gap)?;
    let backward = gap_rank(&block(u, &codomain, &domain, true), tol.rank_zero, tol.rank_gap)?;
    let mut singular_values = forward.singular_values;
    singular_values.extend(backward.singular_values);
    Ok(Compression {
        kernel_dim: domain.len() - forward.rank,
        cokernel_dim: domain.len() - backward.rank,
        singular_values,
    })
}

/// Default window for an operator of the given reach.
pub fn default_window(reach: usize) -> ModeWindow {
    ModeWindow::new(2 * reach.max(1) + 8).expect("positive")
}

/// Index of the compression on `side`, recomputed at `n_max`, `n_max + 4`
/// and `n_max + 8`.
pub fn side_index<T: WindowedOperator + ?Sized>(
    u: &T,
    cut: HalfSpace,
    side: Side,
    window: Option<ModeWindow>,
    tol: &Tolerances,
) -> Result<IndexReport> {
    let base = window.unwrap_or_else(|| default_window(u.reach() + cut.start.unsigned_abs() as usize));
    let mut reports = Vec::new();
    for step in STABILITY_STEPS {
        let op = u.build(base.enlarged(step))?;
        op.check_unitary(tol.algebraic)?;
        reports.push(compression(&op, cut, side, tol)?);
    }
    let values: Vec<i64> = reports.iter().map(Compression::q).collect();
    let windows: Vec<usize> = STABILITY_STEPS.iter().map(|s| base.n_max() + s).collect();
    if values.iter().any(|&q| q != values[0]) {
        return Err(LabError::NotStabilized { windows, values });
    }
    let first = reports.swap_remove(0);
    Ok(IndexReport {
        kernel_dim: first.kernel_dim,
        cokernel_dim: first.cokernel_dim,
        q: values[0],
        stable: true,
        windows,
        singular_values: first.singular_values,
    })
}

/// `q(U)` for the compression to `ran P`.
pub fn charge_index<T: WindowedOperator + ?Sized>(u: &T, cut: HalfSpace, window: Option<ModeWindow>) -> Result<IndexReport> {
    side_index(u, cut, Side::Range, window, &Tolerances::default())
}

/// `q(U_f U_g) = q(U_f) + q(U_g)`.
pub fn verify_additivity(f: &LoopFunction, g: &LoopFunction) -> Result<bool> {
    let cut = HalfSpace::nonnegative();
    let product = UnitaryExpr::Product(vec![UnitaryExpr::Loop(f.clone()), UnitaryExpr::Loop(g.clone())]);
    let qf = charge_index(f, cut, None)?;
    let qg = charge_index(g, cut, None)?;
    let qfg = charge_index(&product, cut, None)?;
    Ok(qf.stable && qg.stable && qfg.stable && qfg.q == qf.q + qg.q)
}

/// `q(U_f) = w(f)`.
pub fn index_winding_agreement(f: &LoopFunction) -> Result<bool> {
    let w = crate::mode_space::winding_number(f)?;
    Ok(charge_index(f, HalfSpace::nonnegative(), None)?.q == w)
}

/// The block `P U P⊥` of a window matrix: its nonzero entries and rank.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OffdiagBlock {
    /// `(m, n)` with `m ∈ ran P`, `n ∈ ran P⊥` and a nonzero entry.
    pub support: Vec<(i64, i64)>,
    pub rank: usize,
}

pub fn offdiag_block(u: &OneParticleOperator, cut: HalfSpace) -> Result<OffdiagBlock> {
    let tol = Tolerances::default();
    let w = u.window();
    let rows: Vec<i64> = w.modes().filter(|&m| cut.contains(m)).collect();
    let cols: Vec<i64> = w.modes().filter(|&m| !cut.contains(m)).collect();
    let b = block(u, &rows, &cols, false);
    let mut support = Vec::new();
    for (i, &m) in rows.iter().enumerate() {
        for (j, &n) in cols.iter().enumerate() {
            if b[(i, j)].norm() > tol.algebraic {
                support.push((m, n));
            }
        }
    }
    let rank = gap_rank(&b, tol.rank_zero, tol.rank_gap)?.rank;
    Ok(OffdiagBlock { support, rank })
}
