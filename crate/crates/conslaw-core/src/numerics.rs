//! Dense numerical kernels: matrices, singular values, rank, incremental
//! orthonormal bases, finite differences, and the matrix exponential.
//!
//! All routines are pure and reentrant: same inputs, same outputs, no global
//! state. Matrices are dense row-major.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::Result;
use crate::invalid_input;
use crate::rmath;

/// Dense row-major matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Mat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Mat {
    /// Zero matrix of the given shape.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![0.0; rows * cols] }
    }

    /// Identity matrix of order `n`.
    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// Builds a matrix whose rows are the given equal-length vectors.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |v| v.len());
        let mut data = Vec::with_capacity(r * c);
        for row in &rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Mat { rows: r, cols: c, data }
    }

    /// Builds a matrix from a generator over (row, col).
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Mat::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.data[i * cols + j] = f(i, j);
            }
        }
        m
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    /// Borrow of row `i`.
    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Transposed copy.
    pub fn transposed(&self) -> Mat {
        let mut t = Mat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        t
    }

    /// Matrix product `self * other`.
    pub fn matmul(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.rows, "shape mismatch in matmul");
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == 0.0 {
                    continue;
                }
                let orow = &other.data[k * other.cols..(k + 1) * other.cols];
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, &o) in dst.iter_mut().zip(orow) {
                    *d += a * o;
                }
            }
        }
        out
    }

    /// Matrix–vector product.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, x.len(), "shape mismatch in matvec");
        let mut out = vec![0.0; self.rows];
        for i in 0..self.rows {
            out[i] = dot(self.row(i), x);
        }
        out
    }

    /// In-place scale by `s`.
    pub fn scale(&mut self, s: f64) {
        for v in &mut self.data {
            *v *= s;
        }
    }

    /// Sum `self + other`.
    pub fn add(&self, other: &Mat) -> Mat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut out = self.clone();
        for (d, &o) in out.data.iter_mut().zip(&other.data) {
            *d += o;
        }
        out
    }

    /// Maximum absolute column sum (operator 1-norm).
    pub fn norm_1(&self) -> f64 {
        let mut best = 0.0_f64;
        for j in 0..self.cols {
            let mut s = 0.0;
            for i in 0..self.rows {
                s += rmath::abs(self.data[i * self.cols + j]);
            }
            best = best.max(s);
        }
        best
    }

    /// True iff every entry is finite.
    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// Dot product of equal-length slices.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut s = 0.0;
    for i in 0..a.len() {
        s += a[i] * b[i];
    }
    s
}

/// Euclidean norm of a slice.
#[inline]
pub fn norm(a: &[f64]) -> f64 {
    rmath::sqrt(dot(a, a))
}

/// `y += alpha * x` in place.
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for i in 0..x.len() {
        y[i] += alpha * x[i];
    }
}

/// Outcome of a numerical rank estimate.
#[derive(Clone, Debug, PartialEq)]
pub struct RankEstimate {
    /// Number of singular values strictly above `tol_used`.
    pub rank: usize,
    /// All singular values, descending.
    pub singular_values: Vec<f64>,
    /// Absolute threshold actually applied: `rel_tol * sigma_max`, or
    /// `rel_tol` itself when the largest singular value is zero.
    pub tol_used: f64,
}

/// Singular values of `a` (descending) by one-sided Jacobi orthogonalization.
///
/// The min(rows, cols) vectors of the longer orientation are rotated pairwise
/// until mutually orthogonal; their norms are the singular values. Pair
/// rotations stop when every normalized off-diagonal inner product is below
/// 1e-15, giving singular values accurate to a few ulps relative to the
/// largest one.
pub fn singular_values(a: &Mat) -> Vec<f64> {
    let k = a.rows.min(a.cols);
    let l = a.rows.max(a.cols);
    if k == 0 {
        return Vec::new();
    }
    // Work rows: columns of `a` if cols <= rows, else rows of `a`.
    let mut w = vec![0.0; k * l];
    if a.cols <= a.rows {
        for j in 0..a.cols {
            for i in 0..a.rows {
                w[j * l + i] = a.data[i * a.cols + j];
            }
        }
    } else {
        w.copy_from_slice(&a.data);
    }

    const PAIR_TOL: f64 = 1e-15;
    const MAX_SWEEPS: usize = 64;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..k {
            for q in (p + 1)..k {
                let (mut app, mut aqq, mut apq) = (0.0, 0.0, 0.0);
                for x in 0..l {
                    let wp = w[p * l + x];
                    let wq = w[q * l + x];
                    app += wp * wp;
                    aqq += wq * wq;
                    apq += wp * wq;
                }
                if rmath::abs(apq) <= PAIR_TOL * rmath::sqrt(app * aqq) {
                    continue;
                }
                rotated = true;
                let tau = (aqq - app) / (2.0 * apq);
                let t = if tau >= 0.0 {
                    1.0 / (tau + rmath::sqrt(1.0 + tau * tau))
                } else {
                    -1.0 / (-tau + rmath::sqrt(1.0 + tau * tau))
                };
                let c = 1.0 / rmath::sqrt(1.0 + t * t);
                let s = c * t;
                for x in 0..l {
                    let wp = w[p * l + x];
                    let wq = w[q * l + x];
                    w[p * l + x] = c * wp - s * wq;
                    w[q * l + x] = s * wp + c * wq;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let mut sv: Vec<f64> = (0..k).map(|p| norm(&w[p * l..(p + 1) * l])).collect();
    sv.sort_unstable_by(|x, y| y.partial_cmp(x).expect("finite singular values"));
    sv
}

/// Numerical rank of `a` with relative tolerance `rel_tol` in (0, 1).
///
/// Errors on non-finite entries or an out-of-range tolerance. The threshold
/// is `rel_tol * sigma_max` (or `rel_tol` when `sigma_max == 0`, so an exact
/// zero matrix has rank 0).
pub fn rank_of(a: &Mat, rel_tol: f64) -> Result<RankEstimate> {
    if !(rel_tol > 0.0 && rel_tol < 1.0) {
        return Err(invalid_input!("rel_tol must lie in (0,1), got {rel_tol}"));
    }
    if !a.all_finite() {
        return Err(crate::CoreError::NonFinite {
            context: alloc::string::String::from("rank_of input matrix"),
            last_finite_t: None,
        });
    }
    let sv = singular_values(a);
    let sigma_max = sv.first().copied().unwrap_or(0.0);
    let tol_used = if sigma_max > 0.0 { rel_tol * sigma_max } else { rel_tol };
    let rank = sv.iter().filter(|&&s| s > tol_used).count();
    Ok(RankEstimate { rank, singular_values: sv, tol_used })
}

/// Default relative tolerance for rank decisions.
pub const DEFAULT_RANK_RTOL: f64 = 1e-8;
/// Default step for finite-difference Jacobians.
pub const DEFAULT_FD_STEP: f64 = 1e-5;

/// Attempts to extend an orthonormal `basis` with vector `v`.
///
/// Precondition (relied upon, checked only in debug builds): existing basis
/// vectors are orthonormal within 1e-12. `v` is projected out of the span
/// with two modified Gram–Schmidt passes; if the residual norm exceeds
/// `rel_tol * ||v||` the normalized residual is appended and `true` returned.
/// A zero `v` returns `Ok(false)`.
pub fn extend_basis(basis: &mut Vec<Vec<f64>>, v: &[f64], rel_tol: f64) -> Result<bool> {
    if !(rel_tol > 0.0 && rel_tol < 1.0) {
        return Err(invalid_input!("rel_tol must lie in (0,1), got {rel_tol}"));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(invalid_input!("extend_basis: candidate vector has non-finite entries"));
    }
    if let Some(b) = basis.first() {
        if b.len() != v.len() {
            return Err(invalid_input!(
                "extend_basis: dimension mismatch (basis {}, candidate {})",
                b.len(),
                v.len()
            ));
        }
    }
    #[cfg(debug_assertions)]
    for (i, bi) in basis.iter().enumerate() {
        debug_assert!((norm(bi) - 1.0).abs() <= 1e-12, "basis vector {i} not unit");
        for bj in basis.iter().skip(i + 1) {
            debug_assert!(dot(bi, bj).abs() <= 1e-12, "basis not orthogonal");
        }
    }

    let vnorm = norm(v);
    if vnorm == 0.0 {
        return Ok(false);
    }
    let mut r = v.to_vec();
    for _pass in 0..2 {
        for b in basis.iter() {
            let c = dot(&r, b);
            axpy(-c, b, &mut r);
        }
    }
    let res = norm(&r);
    if res > rel_tol * vnorm {
        let inv = 1.0 / res;
        for x in &mut r {
            *x *= inv;
        }
        basis.push(r);
        Ok(true)
    } else {
        Ok(false)
    }
}

/// Central-difference Jacobian of `f` at `x` with step `h`:
/// column j is `(f(x + h e_j) - f(x - h e_j)) / (2h)`.
pub fn fd_jacobian<F>(mut f: F, x: &[f64], h: f64) -> Result<Mat>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    if !(h > 0.0) || !h.is_finite() {
        return Err(invalid_input!("fd_jacobian: step h must be positive and finite, got {h}"));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(invalid_input!("fd_jacobian: base point has non-finite entries"));
    }
    let n = x.len();
    let mut xp = x.to_vec();
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut out_dim = None;
    for j in 0..n {
        let x0 = xp[j];
        xp[j] = x0 + h;
        let fp = f(&xp)?;
        xp[j] = x0 - h;
        let fm = f(&xp)?;
        xp[j] = x0;
        if fp.len() != fm.len() {
            return Err(invalid_input!("fd_jacobian: f output length varies"));
        }
        match out_dim {
            None => out_dim = Some(fp.len()),
            Some(m) if m == fp.len() => {}
            Some(m) => {
                return Err(invalid_input!(
                    "fd_jacobian: f output length varies ({m} vs {})",
                    fp.len()
                ))
            }
        }
        let col: Vec<f64> = fp.iter().zip(&fm).map(|(&p, &m)| (p - m) / (2.0 * h)).collect();
        if col.iter().any(|v| !v.is_finite()) {
            return Err(crate::CoreError::NonFinite {
                context: alloc::string::String::from("fd_jacobian column"),
                last_finite_t: None,
            });
        }
        cols.push(col);
    }
    let m = out_dim.unwrap_or(0);
    let mut jac = Mat::zeros(m, n);
    for (j, col) in cols.iter().enumerate() {
        for i in 0..m {
            jac.data[i * n + j] = col[i];
        }
    }
    Ok(jac)
}

/// Matrix exponential by scaling-and-squaring with a truncated Taylor series.
///
/// The input is scaled by 2⁻ˢ until its 1-norm is at most 0.5, the series is
/// summed to degree 18 (truncation below 1e-22 at that norm), and the result
/// squared `s` times.
pub fn expm(a: &Mat) -> Mat {
    assert_eq!(a.rows, a.cols, "expm requires a square matrix");
    let n = a.rows;
    let mut s = 0u32;
    let mut nrm = a.norm_1();
    while nrm > 0.5 && s < 64 {
        nrm *= 0.5;
        s += 1;
    }
    let mut b = a.clone();
    b.scale(rmath::powi(0.5, s as i32));

    let mut result = Mat::identity(n);
    let mut term = Mat::identity(n);
    for k in 1..=18 {
        term = term.matmul(&b);
        term.scale(1.0 / k as f64);
        result = result.add(&term);
    }
    for _ in 0..s {
        result = result.matmul(&result);
    }
    result
}
