use alloc::vec;
use alloc::vec::Vec;

use super::svd::singular_values;
use crate::error::{degenerate, param, Result};
use crate::matrix::{Matrix, OrthonormalBasis};

/// Relative conditioning threshold below which [`qr_orthonormalize`] reports
/// rank deficiency.
const RANK_TOL: f64 = 1e-12;

/// Thin `Q` factor of a Householder QR, normalized so that `diag(R) ≥ 0`.
pub fn qr_orthonormalize(a: &Matrix) -> Result<OrthonormalBasis> {
    let (p, r) = a.shape();
    if r > p {
        return Err(param(alloc::format!("QR needs cols <= rows, got {p}x{r}")));
    }
    let mut w = a.clone();
    let mut reflectors: Vec<Vec<f64>> = Vec::with_capacity(r);
    for k in 0..r {
        let mut x: Vec<f64> = (k..p).map(|i| w[(i, k)]).collect();
        let norm = libm::sqrt(x.iter().map(|v| v * v).sum());
        if norm == 0.0 {
            reflectors.push(vec![0.0; p - k]);
            continue;
        }
        let alpha = if x[0] >= 0.0 { -norm } else { norm };
        x[0] -= alpha;
        let vn = libm::sqrt(x.iter().map(|v| v * v).sum());
        for v in x.iter_mut() {
            *v /= vn;
        }
        for j in k..r {
            let d: f64 = (k..p).map(|i| x[i - k] * w[(i, j)]).sum();
            for i in k..p {
                w[(i, j)] -= 2.0 * d * x[i - k];
            }
        }
        reflectors.push(x);
    }

    let rdiag_mat = Matrix::from_fn(r, r, |i, j| if j >= i { w[(i, j)] } else { 0.0 });
    let s = singular_values(&rdiag_mat);
    if s[0] == 0.0 || s[r - 1] <= RANK_TOL * s[0] {
        return Err(degenerate("QR input is rank deficient"));
    }

    // Q = H_0 ... H_{r-1} applied to the leading r columns of the identity.
    let mut q = Matrix::from_fn(p, r, |i, j| if i == j { 1.0 } else { 0.0 });
    for k in (0..r).rev() {
        let x = &reflectors[k];
        for j in 0..r {
            let d: f64 = (k..p).map(|i| x[i - k] * q[(i, j)]).sum();
            if d != 0.0 {
                for i in k..p {
                    q[(i, j)] -= 2.0 * d * x[i - k];
                }
            }
        }
    }
    for j in 0..r {
        if w[(j, j)] < 0.0 {
            for i in 0..p {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    Ok(OrthonormalBasis::from_matrix_unchecked(q))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::orthonormality_defect;

    #[test]
    fn orthonormal_input_is_fixed() {
        let c = libm::cos(0.3);
        let s = libm::sin(0.3);
        let a = Matrix::from_rows(&[[c, 0.0], [s, 0.0], [0.0, 1.0]]).unwrap();
        let q = qr_orthonormalize(&a).unwrap();
        assert!(q.matrix().sub(&a).unwrap().max_abs() < 1e-15);
    }

    #[test]
    fn scaling_is_removed() {
        let a = Matrix::from_rows(&[[2.0], [0.0], [0.0]]).unwrap();
        let q = qr_orthonormalize(&a).unwrap();
        assert_eq!(q.matrix().column(0), [1.0, 0.0, 0.0]);
    }

    #[test]
    fn hand_gram_schmidt() {
        let a = Matrix::from_rows(&[[1.0, 1.0], [1.0, 0.0], [0.0, 1.0]]).unwrap();
        let q = qr_orthonormalize(&a).unwrap();
        let r2 = libm::sqrt(2.0);
        let r6 = libm::sqrt(6.0);
        let expect = Matrix::from_rows(&[[1.0 / r2, 1.0 / r6], [1.0 / r2, -1.0 / r6], [0.0, 2.0 / r6]]).unwrap();
        assert!(q.matrix().sub(&expect).unwrap().max_abs() < 1e-15);
        let g = q.matrix().transpose_matmul(q.matrix()).unwrap();
        assert!(orthonormality_defect(&g) < 1e-15);
    }

    #[test]
    fn rank_deficiency_is_reported() {
        let a = Matrix::from_rows(&[[1.0, 2.0], [1.0, 2.0], [1.0, 2.0]]).unwrap();
        assert!(matches!(qr_orthonormalize(&a), Err(crate::Error::Degenerate(_))));
        assert!(qr_orthonormalize(&Matrix::zeros(3, 1)).is_err());
        assert!(qr_orthonormalize(&Matrix::zeros(2, 3)).is_err());
    }
}
