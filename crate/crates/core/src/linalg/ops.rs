use alloc::format;
use alloc::vec::Vec;

use super::svd::singular_values;
use super::tridiag::Tridiagonal;
use crate::error::{param, Result};
use crate::matrix::{CorruptionSet, Matrix, OrthonormalBasis};

fn require_square(a: &Matrix, what: &str) -> Result<()> {
    if a.is_square() {
        Ok(())
    } else {
        Err(param(format!("{what} needs a square matrix, got {}x{}", a.rows(), a.cols())))
    }
}

/// Δ(A): `a` with its diagonal set to zero.
pub fn off_diagonal(a: &Matrix) -> Result<Matrix> {
    require_square(a, "off_diagonal")?;
    let mut out = a.clone();
    for i in 0..a.rows() {
        out[(i, i)] = 0.0;
    }
    Ok(out)
}

/// D(A): `a` with every off-diagonal entry set to zero.
pub fn diag_part(a: &Matrix) -> Result<Matrix> {
    require_square(a, "diag_part")?;
    Ok(Matrix::from_diag(&a.diagonal()))
}

fn require_mask_dims(a: &Matrix, g: &CorruptionSet) -> Result<()> {
    if a.shape() == g.dims() {
        Ok(())
    } else {
        let (p1, p2) = g.dims();
        Err(param(format!(
            "corruption set is {p1}x{p2} but the matrix is {}x{}",
            a.rows(),
            a.cols()
        )))
    }
}

/// G(A): entries indexed by `g` kept, all others zero.
pub fn mask_part(a: &Matrix, g: &CorruptionSet) -> Result<Matrix> {
    require_mask_dims(a, g)?;
    let mut out = Matrix::zeros(a.rows(), a.cols());
    for (i, j) in g.iter() {
        out[(i, j)] = a[(i, j)];
    }
    Ok(out)
}

/// Γ(A) = A − G(A): entries indexed by `g` zeroed.
pub fn gamma_part(a: &Matrix, g: &CorruptionSet) -> Result<Matrix> {
    require_mask_dims(a, g)?;
    let mut out = a.clone();
    for (i, j) in g.iter() {
        out[(i, j)] = 0.0;
    }
    Ok(out)
}

/// Largest singular value.
pub fn spectral_norm(a: &Matrix) -> f64 {
    if a.max_abs() == 0.0 {
        return 0.0;
    }
    if a.is_exactly_symmetric() {
        Tridiagonal::new(a).largest_magnitude(1)[0].abs()
    } else {
        singular_values(a)[0]
    }
}

pub fn frobenius_norm(a: &Matrix) -> f64 {
    a.frobenius_norm()
}

/// Eigenvalues of a symmetric matrix, ascending.
pub fn symmetric_eigenvalues(a: &Matrix) -> Result<Vec<f64>> {
    require_square(a, "symmetric_eigenvalues")?;
    if !a.is_exactly_symmetric() {
        return Err(param("symmetric_eigenvalues needs an exactly symmetric matrix"));
    }
    Ok(Tridiagonal::new(a).eigenvalues())
}

/// Orthonormal `p × r` basis whose squared row norms are at most `1/⌊p/r⌋`:
/// `⌊p/r⌋` stacked copies of `I_r`, a partial identity block for the
/// remaining rows, and each column rescaled to unit norm.
pub fn construct_incoherent_basis(p: usize, r: usize) -> Result<OrthonormalBasis> {
    if r == 0 || p < r {
        return Err(param(format!("need p >= r >= 1, got p={p}, r={r}")));
    }
    let alpha = p / r;
    let beta = p - alpha * r;
    let scale: Vec<f64> = (0..r)
        .map(|j| {
            let copies = if j < beta { alpha + 1 } else { alpha };
            1.0 / libm::sqrt(copies as f64)
        })
        .collect();
    let q = Matrix::from_fn(p, r, |i, j| if i % r == j { scale[j] } else { 0.0 });
    Ok(OrthonormalBasis::from_matrix_unchecked(q))
}
