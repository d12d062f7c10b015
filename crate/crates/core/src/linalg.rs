//! Dense linear-algebra helpers shared by the filter, the state-space
//! prediction and the bandit sampler.
//!
//! Inverses are never formed explicitly outside this module; callers go
//! through [`solve_spd`] and [`solve_general`], which factor once and solve.

#[allow(unused_imports)]
use num_traits::Float;
use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Covariances whose smallest eigenvalue is at least this value are accepted.
pub const PSD_TOLERANCE: f64 = 1e-10;
/// Violations larger than this are hard errors rather than round-off.
pub const PSD_REPAIR_LIMIT: f64 = 1e-8;
const REPAIR_JITTER_START: f64 = 1e-10;

/// Jitter schedule used before sampling: 1e-10, escalating x10 to 1e-6.
pub const SAMPLING_JITTER_START: f64 = 1e-10;
pub const SAMPLING_JITTER_MAX: f64 = 1e-6;

#[cfg(feature = "solve-audit")]
static SOLVES: core::sync::atomic::AtomicUsize = core::sync::atomic::AtomicUsize::new(0);

#[inline]
fn record_solve() {
    #[cfg(feature = "solve-audit")]
    SOLVES.fetch_add(1, core::sync::atomic::Ordering::SeqCst);
}

/// Number of linear solves performed by this process so far.
#[cfg(feature = "solve-audit")]
pub fn solve_count() -> usize {
    SOLVES.load(core::sync::atomic::Ordering::SeqCst)
}

/// Replaces `m` with `(m + m') / 2`.
pub fn symmetrize(m: &mut Matrix) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

pub fn max_asymmetry(m: &Matrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

pub fn symmetric_eigenvalues(m: &Matrix) -> Vector {
    SymmetricEigen::new(m.clone()).eigenvalues
}

pub fn min_eigenvalue(m: &Matrix) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    symmetric_eigenvalues(m).min()
}

/// Symmetrizes `m` and applies the PSD repair policy.
///
/// A Cholesky success is taken as proof of definiteness. Otherwise the
/// smallest eigenvalue decides: at or above `-PSD_TOLERANCE` the matrix is
/// accepted unchanged; below `-PSD_REPAIR_LIMIT` it is rejected; in between a
/// diagonal jitter starting at 1e-10 is added (escalating x10 up to the
/// repair limit) until the check passes.
pub fn enforce_psd(mut m: Matrix, what: &'static str) -> Result<Matrix> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch {
            context: what,
            expected: m.nrows(),
            found: m.ncols(),
        });
    }
    symmetrize(&mut m);
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::NotPositiveSemidefinite {
            what,
            min_eigenvalue: f64::NAN,
        });
    }
    if m.nrows() == 0 || Cholesky::new(m.clone()).is_some() {
        return Ok(m);
    }
    let min_eig = min_eigenvalue(&m);
    if min_eig >= -PSD_TOLERANCE {
        return Ok(m);
    }
    if min_eig < -PSD_REPAIR_LIMIT {
        return Err(Error::NotPositiveSemidefinite {
            what,
            min_eigenvalue: min_eig,
        });
    }
    let mut jitter = REPAIR_JITTER_START;
    while jitter <= PSD_REPAIR_LIMIT * (1.0 + 1e-9) {
        if min_eig + jitter >= -PSD_TOLERANCE {
            for i in 0..m.nrows() {
                m[(i, i)] += jitter;
            }
            return Ok(m);
        }
        jitter *= 10.0;
    }
    Err(Error::NotPositiveSemidefinite {
        what,
        min_eigenvalue: min_eig,
    })
}

/// Lower-triangular factor `L` with `L L' = m (+ jitter I)`, used to draw
/// Gaussian samples.
pub fn sampling_factor(m: &Matrix) -> Result<Matrix> {
    if let Some(ch) = Cholesky::new(m.clone()) {
        return Ok(ch.l());
    }
    let mut jitter = SAMPLING_JITTER_START;
    while jitter <= SAMPLING_JITTER_MAX * (1.0 + 1e-9) {
        let mut shifted = m.clone();
        for i in 0..shifted.nrows() {
            shifted[(i, i)] += jitter;
        }
        if let Some(ch) = Cholesky::new(shifted) {
            return Ok(ch.l());
        }
        jitter *= 10.0;
    }
    Err(Error::FactorizationFailed {
        max_jitter: SAMPLING_JITTER_MAX,
    })
}

/// Square-root factor of the PSD projection of `m` (negative eigenvalues
/// clipped to zero). Returns the factor and whether clipping happened.
pub fn clipped_sqrt(m: &Matrix) -> (Matrix, bool) {
    let eig = SymmetricEigen::new(m.clone());
    let mut clipped = false;
    let mut v = eig.eigenvectors;
    for (j, &lambda) in eig.eigenvalues.iter().enumerate() {
        let s = if lambda > 0.0 {
            lambda.sqrt()
        } else {
            clipped |= lambda < 0.0;
            0.0
        };
        let mut col = v.column_mut(j);
        col *= s;
    }
    (v, clipped)
}

/// Solves `a x = b` for symmetric positive definite `a`.
pub fn solve_spd(a: &Matrix, b: &Matrix, what: &'static str) -> Result<Matrix> {
    record_solve();
    let ch = Cholesky::new(a.clone()).ok_or(Error::Singular { what })?;
    Ok(ch.solve(b))
}

/// Solves `a x = b` by LU with partial pivoting, rejecting matrices whose
/// pivot ratio indicates numerical singularity.
pub fn solve_general(a: &Matrix, b: &Matrix, what: &'static str) -> Result<Matrix> {
    record_solve();
    let lu = a.clone().lu();
    let u = lu.u();
    let (mut lo, mut hi) = (f64::INFINITY, 0.0_f64);
    for i in 0..u.nrows().min(u.ncols()) {
        let p = u[(i, i)].abs();
        lo = lo.min(p);
        hi = hi.max(p);
    }
    if !(lo > hi * 1e-15) || !lo.is_finite() {
        return Err(Error::Singular { what });
    }
    lu.solve(b).ok_or(Error::Singular { what })
}

/// Ratio of largest to smallest eigenvalue magnitude of a symmetric matrix.
pub fn condition_estimate(m: &Matrix) -> f64 {
    if m.nrows() == 0 {
        return 1.0;
    }
    let eig = symmetric_eigenvalues(m);
    let mut lo = f64::INFINITY;
    let mut hi = 0.0_f64;
    for v in eig.iter() {
        lo = lo.min(v.abs());
        hi = hi.max(v.abs());
    }
    if hi == 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

/// Smallest eigenvalue magnitude of a symmetric matrix.
pub fn min_abs_eigenvalue(m: &Matrix) -> f64 {
    symmetric_eigenvalues(m)
        .iter()
        .fold(f64::INFINITY, |acc, v| acc.min(v.abs()))
}

/// Block-diagonal assembly.
pub fn block_diagonal(blocks: &[Matrix]) -> Matrix {
    let n: usize = blocks.iter().map(|b| b.nrows()).sum();
    let m: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = Matrix::zeros(n, m);
    let (mut r, mut c) = (0, 0);
    for b in blocks {
        out.view_mut((r, c), (b.nrows(), b.ncols())).copy_from(b);
        r += b.nrows();
        c += b.ncols();
    }
    out
}
