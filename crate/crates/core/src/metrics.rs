//! Subspace distances.

use alloc::format;

use crate::error::{param, Result};
use crate::linalg::spectral_norm;
use crate::matrix::Matrix;
pub use crate::matrix::OrthonormalBasis;

/// Spectral sinΘ distance `‖U₁⊥ᵀU₂‖ = sqrt(1 − s_r(U₁ᵀU₂)²)`, in `[0, 1]`.
///
/// Evaluated as the spectral norm of the residual `U₂ − U₁(U₁ᵀU₂)`, which keeps
/// full relative precision when the subspaces nearly coincide.
pub fn sin_theta(u1: &OrthonormalBasis, u2: &OrthonormalBasis) -> Result<f64> {
    if u1.p() != u2.p() || u1.r() != u2.r() {
        return Err(param(format!(
            "sin_theta needs equal shapes, got {}x{} and {}x{}",
            u1.p(),
            u1.r(),
            u2.p(),
            u2.r()
        )));
    }
    let (a, b) = (u1.matrix(), u2.matrix());
    let c = a.transpose_matmul(b)?;
    let resid = b.sub(&a.matmul(&c)?)?;
    // ‖R‖² = λ_max(RᵀR); the r×r Gram is symmetrized so the eigen path applies.
    let g = resid.transpose_matmul(&resid)?;
    let g = Matrix::from_fn(g.rows(), g.cols(), |i, j| 0.5 * (g[(i, j)] + g[(j, i)]));
    let s = libm::sqrt(spectral_norm(&g));
    Ok(s.clamp(0.0, 1.0))
}

/// `(p/r)·max_i ‖e_iᵀU‖²`, between 1 and `p/r`.
pub fn incoherence_constant(u: &OrthonormalBasis) -> f64 {
    let max = u.row_norms_sq().into_iter().fold(0.0, f64::max);
    u.p() as f64 / u.r() as f64 * max
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{construct_incoherent_basis, singular_values};
    use proptest::prelude::*;

    fn basis(rows: &[&[f64]]) -> OrthonormalBasis {
        OrthonormalBasis::new(Matrix::from_rows(rows).unwrap()).unwrap()
    }

    #[test]
    fn fixtures() {
        let e1 = basis(&[&[1.0], &[0.0]]);
        let e2 = basis(&[&[0.0], &[1.0]]);
        let (c, s) = (libm::cos(core::f64::consts::FRAC_PI_6), libm::sin(core::f64::consts::FRAC_PI_6));
        let rot = basis(&[&[c], &[s]]);
        assert_eq!(sin_theta(&e1, &e1).unwrap(), 0.0);
        assert_eq!(sin_theta(&e1, &e2).unwrap(), 1.0);
        assert!((sin_theta(&e1, &rot).unwrap() - 0.5).abs() < 1e-15);
        assert!(sin_theta(&e1, &OrthonormalBasis::canonical(3, 1).unwrap()).is_err());
    }

    #[test]
    fn incoherence_fixtures() {
        assert_eq!(incoherence_constant(&OrthonormalBasis::canonical(6, 2).unwrap()), 3.0);
        let q = construct_incoherent_basis(6, 2).unwrap();
        assert!((incoherence_constant(&q) - 1.0).abs() < 1e-14);
        assert_eq!(incoherence_constant(&OrthonormalBasis::canonical(4, 1).unwrap()), 4.0);
    }

    fn random_basis(p: usize, r: usize, seed: &[f64]) -> OrthonormalBasis {
        let a = Matrix::from_fn(p, r, |i, j| seed[(i * r + j) % seed.len()] + 0.01 * (i * r + j) as f64);
        crate::linalg::qr_orthonormalize(&a).unwrap()
    }

    fn rotation(r: usize, angle: f64) -> Matrix {
        let mut o = Matrix::identity(r);
        if r >= 2 {
            let (c, s) = (libm::cos(angle), libm::sin(angle));
            o[(0, 0)] = c;
            o[(0, 1)] = -s;
            o[(1, 0)] = s;
            o[(1, 1)] = c;
        }
        o
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn symmetric_rotation_invariant_and_bounded(
            p in 3usize..12,
            r in 1usize..3,
            xs in proptest::collection::vec(-1.0f64..1.0, 40),
            ys in proptest::collection::vec(-1.0f64..1.0, 40),
            angle in 0.0f64..6.28,
        ) {
            let u1 = random_basis(p, r, &xs);
            let u2 = random_basis(p, r, &ys);
            let d12 = sin_theta(&u1, &u2).unwrap();
            let d21 = sin_theta(&u2, &u1).unwrap();
            prop_assert!((0.0..=1.0).contains(&d12));
            prop_assert!((d12 - d21).abs() < 1e-10);
            let rotated = u1.rotate(&rotation(r, angle)).unwrap();
            prop_assert!(sin_theta(&u1, &rotated).unwrap() < 1e-7);
            // Agreement with the smallest-singular-value formula.
            let c = u1.matrix().transpose_matmul(u2.matrix()).unwrap();
            let sr = singular_values(&c)[r - 1].min(1.0);
            prop_assert!((libm::sqrt(1.0 - sr * sr) - d12).abs() < 1e-7);
            // ‖P₁ − P₂‖ ≤ 2 sinΘ.
            let dp = u1.projector().sub(&u2.projector()).unwrap();
            prop_assert!(spectral_norm(&dp) <= 2.0 * d12 + 1e-12);
            let inc = incoherence_constant(&u1);
            prop_assert!(inc >= 1.0 - 1e-12 && inc <= p as f64 / r as f64 + 1e-12);
        }
    }
}
