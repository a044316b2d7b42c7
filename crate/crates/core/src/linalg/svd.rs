//! Truncated SVD with a fixed sign convention.
//!
//! Exactly symmetric input goes through the tridiagonal eigen path
//! (singular values are |λ|, `v_i = sign(λ_i)·u_i`); everything else goes
//! through one-sided Jacobi. Both paths are deterministic.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::tridiag::Tridiagonal;
use crate::error::{param, Result};
use crate::matrix::{Matrix, OrthonormalBasis};

/// Relative spectral gap below which [`SvdFactors::gap_warning`] is raised.
pub const GAP_WARNING_RATIO: f64 = 1e-12;

/// Leading singular triplets of a matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SvdFactors {
    pub u: OrthonormalBasis,
    /// Descending, nonnegative.
    pub singular_values: Vec<f64>,
    pub v: OrthonormalBasis,
    /// `s_r − s_{r+1} ≤ 1e-12·s_1`: the returned subspace is not well determined.
    pub gap_warning: bool,
}

impl SvdFactors {
    pub fn rank(&self) -> usize {
        self.singular_values.len()
    }

    /// `Σ_i s_i u_i v_iᵀ`.
    pub fn reconstruct(&self) -> Matrix {
        let u = self.u.matrix();
        let v = self.v.matrix();
        let us = Matrix::from_fn(u.rows(), u.cols(), |i, k| u[(i, k)] * self.singular_values[k]);
        us.matmul_transpose(v).expect("conforming factors")
    }
}

/// The `r` leading singular triplets of `m`.
pub fn svd_top_r(m: &Matrix, r: usize) -> Result<SvdFactors> {
    let k = m.rows().min(m.cols());
    if r == 0 || r > k {
        return Err(param(format!(
            "rank r={r} outside 1..={k} for a {}x{} matrix",
            m.rows(),
            m.cols()
        )));
    }
    if m.is_exactly_symmetric() {
        Ok(symmetric_top_r(m, r))
    } else {
        Ok(jacobi_top_r(m, r))
    }
}

/// All `min(rows, cols)` singular values, descending.
pub fn singular_values(m: &Matrix) -> Vec<f64> {
    if m.is_exactly_symmetric() {
        let t = Tridiagonal::new(m);
        let mut s: Vec<f64> = t.eigenvalues().into_iter().map(f64::abs).collect();
        s.sort_by(|a, b| b.total_cmp(a));
        s
    } else {
        let (s, _, _) = one_sided_jacobi(m, false);
        s
    }
}

/// Best rank-`r` approximation `Σ_{i≤r} s_i u_i v_iᵀ`.
pub fn rank_r_truncation(m: &Matrix, r: usize) -> Result<Matrix> {
    Ok(svd_top_r(m, r)?.reconstruct())
}

fn gap_warning(s: &[f64], next: Option<f64>) -> bool {
    match next {
        Some(next) => s[s.len() - 1] - next <= GAP_WARNING_RATIO * s[0],
        None => false,
    }
}

/// Largest |entry| of every column made nonnegative (first index on ties).
/// Returns the flipped columns.
pub(crate) fn apply_sign_convention(u: &mut Matrix) -> Vec<bool> {
    let mut flipped = vec![false; u.cols()];
    for c in 0..u.cols() {
        let mut best = 0;
        let mut best_abs = -1.0;
        for i in 0..u.rows() {
            let a = u[(i, c)].abs();
            if a > best_abs {
                best_abs = a;
                best = i;
            }
        }
        if u[(best, c)] < 0.0 {
            flipped[c] = true;
            for i in 0..u.rows() {
                u[(i, c)] = -u[(i, c)];
            }
        }
    }
    flipped
}

pub(crate) fn symmetric_top_r(m: &Matrix, r: usize) -> SvdFactors {
    let p = m.rows();
    let t = Tridiagonal::new(m);
    let want = (r + 1).min(p);
    let vals = t.largest_magnitude(want);
    let next = if want > r { Some(vals[r].abs()) } else { None };
    let lambdas = &vals[..r];
    let mut u = t.eigenvectors(lambdas);
    apply_sign_convention(&mut u);
    let v = Matrix::from_fn(p, r, |i, k| if lambdas[k] < 0.0 { -u[(i, k)] } else { u[(i, k)] });
    let s: Vec<f64> = lambdas.iter().map(|l| l.abs()).collect();
    let gap_warning = gap_warning(&s, next);
    SvdFactors {
        u: OrthonormalBasis::from_matrix_unchecked(u),
        singular_values: s,
        v: OrthonormalBasis::from_matrix_unchecked(v),
        gap_warning,
    }
}

/// Signed eigenpairs of a symmetric matrix with the `r` largest |λ|, ordered by
/// decreasing |λ|; vectors follow the sign convention.
pub(crate) fn symmetric_eigenpairs(m: &Matrix, r: usize) -> (Vec<f64>, Matrix, Option<f64>) {
    let t = Tridiagonal::new(m);
    let want = (r + 1).min(m.rows());
    let vals = t.largest_magnitude(want);
    let next = if want > r { Some(vals[r].abs()) } else { None };
    let mut u = t.eigenvectors(&vals[..r]);
    apply_sign_convention(&mut u);
    (vals[..r].to_vec(), u, next)
}

fn jacobi_top_r(m: &Matrix, r: usize) -> SvdFactors {
    let (s, mut u, mut v) = one_sided_jacobi(m, true);
    let u_full = u.take().expect("vectors requested");
    let v_full = v.take().expect("vectors requested");
    let next = s.get(r).copied();
    let mut u = u_full.leading_columns(r);
    let mut v = v_full.leading_columns(r);
    let flipped = apply_sign_convention(&mut u);
    for (c, &f) in flipped.iter().enumerate() {
        if f {
            for i in 0..v.rows() {
                v[(i, c)] = -v[(i, c)];
            }
        }
    }
    let s = s[..r].to_vec();
    let gap_warning = gap_warning(&s, next);
    SvdFactors {
        u: OrthonormalBasis::from_matrix_unchecked(u),
        singular_values: s,
        v: OrthonormalBasis::from_matrix_unchecked(v),
        gap_warning,
    }
}

/// One-sided (Hestenes) Jacobi SVD. Returns descending singular values and, on
/// request, `U` (`rows × k`) and `V` (`cols × k`) with `k = min(rows, cols)`.
fn one_sided_jacobi(m: &Matrix, vectors: bool) -> (Vec<f64>, Option<Matrix>, Option<Matrix>) {
    let transposed = m.rows() < m.cols();
    let a = if transposed { m.transpose() } else { m.clone() };
    let (rows, n) = a.shape();
    // Column-major working copy of A and of the accumulated rotation W.
    let mut cols: Vec<Vec<f64>> = (0..n).map(|j| a.column(j)).collect();
    let mut w: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            e
        })
        .collect();

    let tol = f64::EPSILON * libm::sqrt(rows as f64);
    for _sweep in 0..80 {
        let mut rotated = false;
        for i in 0..n {
            for j in i + 1..n {
                let (alpha, beta, gamma) = {
                    let (ci, cj) = (&cols[i], &cols[j]);
                    let mut alpha = 0.0;
                    let mut beta = 0.0;
                    let mut gamma = 0.0;
                    for (x, y) in ci.iter().zip(cj) {
                        alpha += x * x;
                        beta += y * y;
                        gamma += x * y;
                    }
                    (alpha, beta, gamma)
                };
                if gamma == 0.0 || gamma.abs() <= tol * libm::sqrt(alpha * beta) {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + libm::sqrt(1.0 + zeta * zeta));
                let c = 1.0 / libm::sqrt(1.0 + t * t);
                let s = c * t;
                rotate_pair(&mut cols, i, j, c, s);
                rotate_pair(&mut w, i, j, c, s);
            }
        }
        if !rotated {
            break;
        }
    }

    let norms: Vec<f64> = cols.iter().map(|c| libm::sqrt(c.iter().map(|x| x * x).sum())).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| norms[b].total_cmp(&norms[a]).then(a.cmp(&b)));
    let s: Vec<f64> = order.iter().map(|&k| norms[k]).collect();
    if !vectors {
        return (s, None, None);
    }

    let mut left = Matrix::zeros(rows, n);
    let mut right = Matrix::zeros(n, n);
    let mut missing = Vec::new();
    for (dst, &src) in order.iter().enumerate() {
        if norms[src] > 0.0 {
            for i in 0..rows {
                left[(i, dst)] = cols[src][i] / norms[src];
            }
        } else {
            missing.push(dst);
        }
        for i in 0..n {
            right[(i, dst)] = w[src][i];
        }
    }
    complete_basis(&mut left, &missing);

    if transposed {
        (s, Some(right), Some(left))
    } else {
        (s, Some(left), Some(right))
    }
}

fn rotate_pair(cols: &mut [Vec<f64>], i: usize, j: usize, c: f64, s: f64) {
    let (lo, hi) = cols.split_at_mut(j);
    let (ci, cj) = (&mut lo[i], &mut hi[0]);
    for (x, y) in ci.iter_mut().zip(cj.iter_mut()) {
        let (xi, yj) = (*x, *y);
        *x = c * xi - s * yj;
        *y = s * xi + c * yj;
    }
}

/// Fills the listed zero columns with unit vectors orthogonal to every other
/// column, drawing candidates from the standard basis in index order.
fn complete_basis(q: &mut Matrix, missing: &[usize]) {
    let (rows, ncols) = q.shape();
    for &dst in missing {
        let mut best: Option<Vec<f64>> = None;
        let mut best_norm = 0.0;
        for e in 0..rows {
            let mut x = vec![0.0; rows];
            x[e] = 1.0;
            for c in 0..ncols {
                if c == dst || (missing.contains(&c) && c > dst) {
                    continue;
                }
                let d: f64 = (0..rows).map(|i| q[(i, c)] * x[i]).sum();
                for i in 0..rows {
                    x[i] -= d * q[(i, c)];
                }
            }
            let nrm = libm::sqrt(x.iter().map(|v| v * v).sum());
            if nrm > best_norm + 1e-12 {
                best_norm = nrm;
                best = Some(x);
            }
            if best_norm > 0.5 {
                break;
            }
        }
        let x = best.expect("a complement direction exists");
        for i in 0..rows {
            q[(i, dst)] = x[i] / best_norm;
        }
    }
}
