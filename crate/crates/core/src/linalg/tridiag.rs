//! Symmetric eigenproblems through Householder tridiagonalization.
//!
//! Eigenvalues come from Sturm-sequence bisection on the tridiagonal form, so any
//! subset (the extremes, in practice) is found in `O(p)` per bisection step.
//! Eigenvectors for the selected eigenvalues come from inverse iteration with
//! partial pivoting, orthogonalized inside clusters, then mapped back through the
//! stored reflectors. Every step is a fixed sequence of floating-point operations,
//! so identical inputs give identical bits.

use alloc::vec;
use alloc::vec::Vec;

use crate::matrix::Matrix;

/// Tridiagonal form `QᵀAQ = T` with the reflectors that define `Q`.
pub(crate) struct Tridiagonal {
    pub diag: Vec<f64>,
    /// `off[k]` couples rows `k` and `k + 1`.
    pub off: Vec<f64>,
    /// Unit Householder vectors; reflector `k` acts on indices `k+1..n`.
    reflectors: Vec<Vec<f64>>,
}

impl Tridiagonal {
    /// Reduces a symmetric matrix. Only exact symmetry is assumed by callers;
    /// the lower triangle is read.
    pub fn new(a: &Matrix) -> Self {
        let n = a.rows();
        debug_assert!(a.is_square());
        let mut w: Vec<f64> = a.as_slice().to_vec();
        let mut diag = vec![0.0; n];
        let mut off = vec![0.0; n.saturating_sub(1)];
        let mut reflectors = Vec::with_capacity(n.saturating_sub(2));
        let mut p = vec![0.0; n];

        for k in 0..n.saturating_sub(1) {
            let m = n - k - 1;
            let mut v: Vec<f64> = (0..m).map(|i| w[(k + 1 + i) * n + k]).collect();
            let norm = libm::sqrt(v.iter().map(|x| x * x).sum());
            diag[k] = w[k * n + k];
            if m == 1 || norm == 0.0 {
                off[k] = v[0];
                if m > 1 {
                    reflectors.push(vec![0.0; m]);
                }
                continue;
            }
            let alpha = if v[0] > 0.0 { -norm } else { norm };
            off[k] = alpha;
            v[0] -= alpha;
            let vnorm = libm::sqrt(v.iter().map(|x| x * x).sum());
            for x in v.iter_mut() {
                *x /= vnorm;
            }

            // Trailing block B = w[k+1.., k+1..] ← H B H with H = I − 2vvᵀ.
            let base = k + 1;
            for i in 0..m {
                let row = &w[(base + i) * n + base..(base + i) * n + n];
                p[i] = row.iter().zip(&v).map(|(a, b)| a * b).sum();
            }
            let kappa: f64 = (0..m).map(|i| v[i] * p[i]).sum();
            for i in 0..m {
                p[i] -= kappa * v[i];
            }
            for i in 0..m {
                let vi2 = 2.0 * v[i];
                let pi2 = 2.0 * p[i];
                let row = &mut w[(base + i) * n + base..(base + i) * n + n];
                for (j, x) in row.iter_mut().enumerate() {
                    *x -= vi2 * p[j] + pi2 * v[j];
                }
            }
            reflectors.push(v);
        }
        if n > 0 {
            diag[n - 1] = w[(n - 1) * n + (n - 1)];
        }
        Self { diag, off, reflectors }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    /// A bound on `‖T‖` (Gershgorin).
    pub fn norm_bound(&self) -> f64 {
        let n = self.len();
        (0..n)
            .map(|i| {
                let left = if i > 0 { self.off[i - 1].abs() } else { 0.0 };
                let right = if i + 1 < n { self.off[i].abs() } else { 0.0 };
                self.diag[i].abs() + left + right
            })
            .fold(0.0, f64::max)
    }

    /// Number of eigenvalues strictly below `x`.
    fn count_below(&self, x: f64, pivmin: f64) -> usize {
        let mut count = 0;
        let mut q = self.diag[0] - x;
        if q.abs() < pivmin {
            q = -pivmin;
        }
        if q < 0.0 {
            count += 1;
        }
        for i in 1..self.len() {
            let e = self.off[i - 1];
            q = self.diag[i] - x - e * e / q;
            if q.abs() < pivmin {
                q = -pivmin;
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// The `k`-th smallest eigenvalue (0-based), by bisection.
    pub fn eigenvalue(&self, k: usize) -> f64 {
        let n = self.len();
        debug_assert!(k < n);
        let norm = self.norm_bound();
        if norm == 0.0 {
            return 0.0;
        }
        let max_off_sq = self.off.iter().map(|e| e * e).fold(0.0, f64::max);
        let pivmin = f64::MIN_POSITIVE.max(f64::MIN_POSITIVE * max_off_sq);
        let mut lo = -norm * (1.0 + 4.0 * f64::EPSILON) - pivmin;
        let mut hi = norm * (1.0 + 4.0 * f64::EPSILON) + pivmin;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if hi - lo <= 1e-3 * f64::EPSILON * norm {
                break;
            }
            if self.count_below(mid, pivmin) > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        // Zero pivots count as negative, so the invariant is λ_k ∈ (lo, hi].
        hi
    }

    /// All eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        (0..self.len()).map(|k| self.eigenvalue(k)).collect()
    }

    /// Eigenvalues with the `count` largest magnitudes, ordered by decreasing
    /// magnitude (ties: larger signed value first, then lower index in the
    /// ascending spectrum).
    pub fn largest_magnitude(&self, count: usize) -> Vec<f64> {
        let n = self.len();
        let count = count.min(n);
        let mut idx: Vec<usize> = if 2 * count >= n {
            (0..n).collect()
        } else {
            (0..count).chain(n - count..n).collect()
        };
        idx.dedup();
        let mut vals: Vec<(usize, f64)> = idx.into_iter().map(|k| (k, self.eigenvalue(k))).collect();
        vals.sort_by(|a, b| {
            b.1.abs()
                .total_cmp(&a.1.abs())
                .then(b.1.total_cmp(&a.1))
                .then(a.0.cmp(&b.0))
        });
        vals.truncate(count);
        vals.into_iter().map(|(_, v)| v).collect()
    }

    /// Unit eigenvectors of the original matrix for the given eigenvalues, as
    /// the columns of an `n × values.len()` matrix.
    pub fn eigenvectors(&self, values: &[f64]) -> Matrix {
        let n = self.len();
        let norm = self.norm_bound();
        let cluster_tol = 1e-3 * norm;
        let mut found: Vec<(f64, Vec<f64>)> = Vec::with_capacity(values.len());
        for &lambda in values {
            if norm == 0.0 {
                // Every vector is an eigenvector of the zero matrix.
                let mut e = vec![0.0; n];
                e[found.len()] = 1.0;
                found.push((lambda, e));
                continue;
            }
            let mut x = start_vector(n, found.len());
            let lu = TridiagLu::factor(self, lambda, norm);
            for _ in 0..5 {
                lu.solve(&mut x);
                for (mu, y) in &found {
                    if (mu - lambda).abs() <= cluster_tol {
                        let c: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
                        for (xi, yi) in x.iter_mut().zip(y) {
                            *xi -= c * yi;
                        }
                    }
                }
                normalize(&mut x);
            }
            found.push((lambda, x));
        }

        let mut out = Matrix::zeros(n, values.len().max(1));
        for (col, (_, y)) in found.iter().enumerate() {
            let mut z = y.clone();
            for (k, v) in self.reflectors.iter().enumerate().rev() {
                let tail = &mut z[k + 1..];
                let c: f64 = tail.iter().zip(v).map(|(a, b)| a * b).sum();
                if c != 0.0 {
                    for (t, vi) in tail.iter_mut().zip(v) {
                        *t -= 2.0 * c * vi;
                    }
                }
            }
            for i in 0..n {
                out[(i, col)] = z[i];
            }
        }
        out
    }
}

fn normalize(x: &mut [f64]) {
    let nrm = libm::sqrt(x.iter().map(|v| v * v).sum());
    if nrm > 0.0 {
        for v in x.iter_mut() {
            *v /= nrm;
        }
    }
}

/// Deterministic, non-degenerate starting vector for inverse iteration.
fn start_vector(n: usize, salt: usize) -> Vec<f64> {
    let mut state: u64 = 0x9E37_79B9_7F4A_7C15 ^ (salt as u64).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    let mut x: Vec<f64> = (0..n)
        .map(|_| {
            state = state.wrapping_mul(6_364_136_223_846_793_005).wrapping_add(1_442_695_040_888_963_407);
            0.5 + ((state >> 11) as f64) * (1.0 / (1u64 << 53) as f64)
        })
        .collect();
    normalize(&mut x);
    x
}

/// LU factorization of `T − λI` with partial pivoting.
struct TridiagLu {
    dl: Vec<f64>,
    d: Vec<f64>,
    du: Vec<f64>,
    du2: Vec<f64>,
    swapped: Vec<bool>,
}

impl TridiagLu {
    fn factor(t: &Tridiagonal, lambda: f64, norm: f64) -> Self {
        let n = t.len();
        let mut d: Vec<f64> = t.diag.iter().map(|v| v - lambda).collect();
        let mut dl = t.off.clone();
        let mut du = t.off.clone();
        let mut du2 = vec![0.0; n.saturating_sub(2)];
        let mut swapped = vec![false; n.saturating_sub(1)];
        for i in 0..n.saturating_sub(1) {
            if d[i].abs() >= dl[i].abs() {
                if d[i] != 0.0 {
                    let fact = dl[i] / d[i];
                    dl[i] = fact;
                    d[i + 1] -= fact * du[i];
                } else {
                    dl[i] = 0.0;
                }
            } else {
                let fact = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = fact;
                let temp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = temp - fact * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] = -fact * du[i + 1];
                }
                swapped[i] = true;
            }
        }
        let tiny = f64::EPSILON * norm;
        for v in d.iter_mut() {
            if v.abs() < tiny {
                *v = if *v < 0.0 { -tiny } else { tiny };
            }
        }
        Self { dl, d, du, du2, swapped }
    }

    fn solve(&self, b: &mut [f64]) {
        let n = b.len();
        for i in 0..n.saturating_sub(1) {
            if self.swapped[i] {
                let temp = b[i];
                b[i] = b[i + 1];
                b[i + 1] = temp - self.dl[i] * b[i];
            } else {
                b[i + 1] -= self.dl[i] * b[i];
            }
        }
        b[n - 1] /= self.d[n - 1];
        if n > 1 {
            b[n - 2] = (b[n - 2] - self.du[n - 2] * b[n - 1]) / self.d[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            b[i] = (b[i] - self.du[i] * b[i + 1] - self.du2[i] * b[i + 2]) / self.d[i];
        }
        // Rescale to keep repeated solves finite.
        let big = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if big > 1e150 || (big > 0.0 && big < 1e-150) {
            for v in b.iter_mut() {
                *v /= big;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sym(rows: &[&[f64]]) -> Matrix {
        Matrix::from_rows(rows).unwrap()
    }

    #[test]
    fn eigenvalues_of_small_matrices() {
        let a = sym(&[&[2.0, 1.0, 0.0], &[1.0, 2.0, 1.0], &[0.0, 1.0, 2.0]]);
        let t = Tridiagonal::new(&a);
        let ev = t.eigenvalues();
        let s2 = core::f64::consts::SQRT_2;
        let expected = [2.0 - s2, 2.0, 2.0 + s2];
        for (a, b) in ev.iter().zip(expected) {
            assert!((a - b).abs() < 1e-13, "{ev:?}");
        }
    }

    #[test]
    fn eigenvectors_satisfy_definition() {
        let n = 7;
        let a = Matrix::from_fn(n, n, |i, j| 1.0 / (1.0 + (i + j) as f64) + if i == j { i as f64 } else { 0.0 });
        let t = Tridiagonal::new(&a);
        let vals = t.largest_magnitude(n);
        let vecs = t.eigenvectors(&vals);
        for (c, &lam) in vals.iter().enumerate() {
            let x = vecs.column(c);
            for i in 0..n {
                let ax: f64 = (0..n).map(|j| a[(i, j)] * x[j]).sum();
                assert!((ax - lam * x[i]).abs() < 1e-12);
            }
        }
        let g = vecs.transpose_matmul(&vecs).unwrap();
        assert!(crate::matrix::orthonormality_defect(&g) < 1e-12);
    }

    #[test]
    fn repeated_eigenvalues_give_orthonormal_vectors() {
        let a = Matrix::identity(5);
        let t = Tridiagonal::new(&a);
        let vals = t.largest_magnitude(3);
        assert_eq!(vals, [1.0, 1.0, 1.0]);
        let v = t.eigenvectors(&vals);
        let g = v.transpose_matmul(&v).unwrap();
        assert!(crate::matrix::orthonormality_defect(&g) < 1e-12);
    }
}
