//! HeteroPCA and the baselines it is compared against, plus the matrix
//! builders (covariances, Gram matrices, reconstructions) that feed them.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{degenerate, param, Error, Result};
use crate::linalg::{off_diagonal, spectral_norm, svd_top_r, symmetric_eigenpairs, GAP_WARNING_RATIO};
use crate::matrix::{CorruptionSet, Matrix, OrthonormalBasis};

/// Inputs whose asymmetry exceeds this (relative to the largest off-diagonal
/// magnitude, floored at 1) are rejected instead of symmetrized.
pub const SYMMETRY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct HeteroPcaConfig {
    pub rank: usize,
    pub max_iterations: usize,
    /// Stop once the largest change of an imputed entry is at most
    /// `tolerance · (1 + max |off-diagonal of the input|)`.
    pub tolerance: f64,
    /// Entries to impute. `None` means the diagonal.
    pub corruption: Option<CorruptionSet>,
}

impl HeteroPcaConfig {
    pub const DEFAULT_MAX_ITERATIONS: usize = 1000;
    pub const DEFAULT_TOLERANCE: f64 = 1e-9;

    pub fn new(rank: usize) -> Self {
        Self {
            rank,
            max_iterations: Self::DEFAULT_MAX_ITERATIONS,
            tolerance: Self::DEFAULT_TOLERANCE,
            corruption: None,
        }
    }

    pub fn with_max_iterations(mut self, t: usize) -> Self {
        self.max_iterations = t;
        self
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tolerance = tol;
        self
    }

    pub fn with_corruption(mut self, g: CorruptionSet) -> Self {
        self.corruption = Some(g);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.rank == 0 {
            return Err(param("rank must be at least 1"));
        }
        if self.max_iterations == 0 {
            return Err(param("max_iterations must be at least 1"));
        }
        if !(self.tolerance >= 0.0) || !self.tolerance.is_finite() {
            return Err(param("tolerance must be a finite nonnegative number"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeteroPcaResult {
    /// Leading `r` left singular vectors of the final iterate.
    pub basis: OrthonormalBasis,
    pub iterations_used: usize,
    /// Largest absolute change of the imputed entries, one value per iteration.
    pub diag_residual_history: Vec<f64>,
    pub converged: bool,
    pub gap_warning: bool,
    /// Leading singular values of the final iterate.
    pub singular_values: Vec<f64>,
    /// The final iterate `N^T`.
    pub final_iterate: Matrix,
    /// Its best rank-`r` approximation.
    pub low_rank_fit: Matrix,
}

impl HeteroPcaResult {
    /// `‖Δ(Ñ − s)‖`: how well the rank-`r` fit matches the off-diagonal of `s`.
    pub fn offdiag_residual(&self, s: &Matrix) -> Result<f64> {
        Ok(spectral_norm(&off_diagonal(&self.low_rank_fit.sub(s)?)?))
    }

    /// Largest gap between the imputed entries of the final iterate and those
    /// of its rank-`r` fit (zero at an exact fixed point).
    pub fn fixed_point_residual(&self, g: Option<&CorruptionSet>) -> f64 {
        let p = self.final_iterate.rows();
        let diff = |i: usize, j: usize| (self.final_iterate[(i, j)] - self.low_rank_fit[(i, j)]).abs();
        match g {
            None => (0..p).map(|i| diff(i, i)).fold(0.0, f64::max),
            Some(g) => g.iter().map(|(i, j)| diff(i, j)).fold(0.0, f64::max),
        }
    }
}

/// `sqrt(min(b, 2r))`, the upper bound on the corruption-set constant η used
/// in place of its exact value.
pub fn eta_upper_bound(g: &CorruptionSet, r: usize) -> f64 {
    libm::sqrt(g.sparsity().min(2 * r) as f64)
}

/// HeteroPCA: iteratively re-impute the diagonal of `s` with the diagonal of
/// its current rank-`r` approximation. A corruption set in `cfg` switches to
/// the generalized algorithm.
pub fn hetero_pca(s: &Matrix, cfg: &HeteroPcaConfig) -> Result<HeteroPcaResult> {
    match &cfg.corruption {
        Some(g) => generalized_hetero_pca(s, g, cfg),
        None => {
            let pairs: Vec<(usize, usize)> = (0..s.rows()).map(|i| (i, i)).collect();
            run(s, &pairs, cfg)
        }
    }
}

/// Generalized HeteroPCA: impute every entry in `g` (which must be symmetric)
/// from the rank-`r` approximation, keeping the rest of `n` fixed.
pub fn generalized_hetero_pca(n: &Matrix, g: &CorruptionSet, cfg: &HeteroPcaConfig) -> Result<HeteroPcaResult> {
    if g.dims() != n.shape() {
        let (a, b) = g.dims();
        return Err(param(format!(
            "corruption set is {a}x{b} but the matrix is {}x{}",
            n.rows(),
            n.cols()
        )));
    }
    if !g.is_symmetric() {
        return Err(param("corruption set must be symmetric"));
    }
    let pairs: Vec<(usize, usize)> = g.iter().filter(|&(i, j)| i <= j).collect();
    run(n, &pairs, cfg)
}

fn symmetrize(s: &Matrix, pairs: &[(usize, usize)]) -> Result<Matrix> {
    let p = s.rows();
    if !s.is_square() {
        return Err(param(format!("expected a square matrix, got {}x{}", s.rows(), s.cols())));
    }
    // Scale and asymmetry ignore the imputed entries, which never influence the output.
    let mut masked = s.clone();
    for &(i, j) in pairs {
        masked[(i, j)] = 0.0;
        masked[(j, i)] = 0.0;
    }
    let scale = masked.max_abs().max(1.0);
    let asym = masked.asymmetry().unwrap_or(0.0);
    if asym > SYMMETRY_TOL * scale {
        return Err(param(format!("input is not symmetric (max asymmetry {asym:e})")));
    }
    Ok(Matrix::from_fn(p, p, |i, j| 0.5 * (masked[(i, j)] + masked[(j, i)])))
}

/// Imputed entry `(i, j)` of the rank-`r` fit `Σ_k λ_k u_ik u_jk`.
fn fitted(lambdas: &[f64], u: &Matrix, i: usize, j: usize) -> f64 {
    let (ui, uj) = (u.row(i), u.row(j));
    lambdas.iter().enumerate().map(|(k, l)| l * ui[k] * uj[k]).sum()
}

fn run(s: &Matrix, pairs: &[(usize, usize)], cfg: &HeteroPcaConfig) -> Result<HeteroPcaResult> {
    cfg.validate()?;
    let p = s.rows();
    if cfg.rank > p {
        return Err(param(format!("rank r={} exceeds dimension p={p}", cfg.rank)));
    }
    let mut n = symmetrize(s, pairs)?;
    let scale = n.max_abs();
    if scale == 0.0 {
        return Err(degenerate("off-diagonal information empty: every retained entry is zero"));
    }
    let threshold = cfg.tolerance * (1.0 + scale);
    let r = cfg.rank;

    let mut history = Vec::new();
    let mut converged = false;
    let mut eig = symmetric_eigenpairs(&n, r);
    for _ in 0..cfg.max_iterations {
        let (lambdas, u, _) = &eig;
        let mut change: f64 = 0.0;
        for &(i, j) in pairs {
            let v = fitted(lambdas, u, i, j);
            change = change.max((v - n[(i, j)]).abs());
            n[(i, j)] = v;
            n[(j, i)] = v;
        }
        history.push(change);
        eig = symmetric_eigenpairs(&n, r);
        if change <= threshold {
            converged = true;
            break;
        }
    }

    let (lambdas, u, next) = eig;
    let singular_values: Vec<f64> = lambdas.iter().map(|l| l.abs()).collect();
    let gap_warning = match next {
        Some(next) => singular_values[r - 1] - next <= GAP_WARNING_RATIO * singular_values[0],
        None => false,
    };
    let low_rank_fit = Matrix::from_fn(p, p, |i, j| {
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        fitted(&lambdas, &u, a, b)
    });
    Ok(HeteroPcaResult {
        basis: OrthonormalBasis::from_matrix_unchecked(u),
        iterations_used: history.len(),
        diag_residual_history: history,
        converged,
        gap_warning,
        singular_values,
        final_iterate: n,
        low_rank_fit,
    })
}

/// Leading `r` left singular vectors of `s`.
pub fn regular_svd_estimator(s: &Matrix, r: usize) -> Result<OrthonormalBasis> {
    Ok(svd_top_r(s, r)?.u)
}

/// Leading `r` left singular vectors of Δ(s).
pub fn diagonal_deletion_estimator(s: &Matrix, r: usize) -> Result<OrthonormalBasis> {
    Ok(svd_top_r(&off_diagonal(s)?, r)?.u)
}

fn row_means(y: &Matrix) -> Vec<f64> {
    (0..y.rows())
        .map(|i| y.row(i).iter().sum::<f64>() / y.cols() as f64)
        .collect()
}

/// Symmetric `A Aᵀ`, computed on the upper triangle and mirrored.
fn symmetric_outer(a: &Matrix, scale: f64) -> Matrix {
    let p = a.rows();
    let mut out = Matrix::zeros(p, p);
    for i in 0..p {
        for j in i..p {
            let v = scale * crate::matrix::dot(a.row(i), a.row(j));
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    out
}

/// Unbiased sample covariance of the columns of `y` (`p × n`, `n ≥ 2`).
pub fn sample_covariance(y: &Matrix) -> Result<Matrix> {
    let n = y.cols();
    if n < 2 {
        return Err(param(format!("sample covariance needs n >= 2 columns, got {n}")));
    }
    let means = row_means(y);
    let centered = Matrix::from_fn(y.rows(), n, |i, k| y[(i, k)] - means[i]);
    Ok(symmetric_outer(&centered, 1.0 / (n - 1) as f64))
}

/// `y yᵀ`.
pub fn gram(y: &Matrix) -> Matrix {
    symmetric_outer(y, 1.0)
}

/// Covariance from partially observed data together with the number of
/// coordinate pairs `i < j` that were never observed together.
#[derive(Debug, Clone, PartialEq)]
pub struct PairwiseCovariance {
    pub matrix: Matrix,
    pub zero_overlap_pairs: usize,
}

/// Pairwise-complete covariance: entry `(i, j)` averages
/// `(Y_ik − Ȳ_i)(Y_jk − Ȳ_j)` over the samples where both coordinates are
/// observed, with `Ȳ_i` the mean of the observed entries of row `i`.
/// Pairs never observed together are set to 0 and counted.
pub fn pairwise_complete_covariance(y: &Matrix, r_mask: &Matrix) -> Result<PairwiseCovariance> {
    if y.shape() != r_mask.shape() {
        return Err(param("data and mask shapes differ"));
    }
    if r_mask.as_slice().iter().any(|&m| m != 0.0 && m != 1.0) {
        return Err(param("mask entries must be 0 or 1"));
    }
    let (p, n) = y.shape();
    let mut centered = Matrix::zeros(p, n);
    for i in 0..p {
        let (yi, ri) = (y.row(i), r_mask.row(i));
        let count: f64 = ri.iter().sum();
        if count == 0.0 {
            return Err(Error::Degenerate(format!("row {i} has no observed entries")));
        }
        let mean = yi.iter().zip(ri).map(|(v, m)| v * m).sum::<f64>() / count;
        for k in 0..n {
            centered[(i, k)] = (yi[k] - mean) * ri[k];
        }
    }
    let mut out = Matrix::zeros(p, p);
    let mut zero_overlap_pairs = 0;
    for i in 0..p {
        for j in i..p {
            let overlap = crate::matrix::dot(r_mask.row(i), r_mask.row(j));
            let v = if overlap == 0.0 {
                zero_overlap_pairs += 1;
                0.0
            } else {
                crate::matrix::dot(centered.row(i), centered.row(j)) / overlap
            };
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    Ok(PairwiseCovariance { matrix: out, zero_overlap_pairs })
}

/// `Û Ûᵀ y V̂ V̂ᵀ`.
pub fn reconstruct_low_rank(y: &Matrix, u_hat: &OrthonormalBasis, v_hat: &OrthonormalBasis) -> Result<Matrix> {
    if u_hat.p() != y.rows() || v_hat.p() != y.cols() {
        return Err(param(format!(
            "bases {}x{} and {}x{} do not conform with a {}x{} matrix",
            u_hat.p(),
            u_hat.r(),
            v_hat.p(),
            v_hat.r(),
            y.rows(),
            y.cols()
        )));
    }
    let (u, v) = (u_hat.matrix(), v_hat.matrix());
    let core = u.transpose_matmul(y)?.matmul(v)?;
    u.matmul(&core)?.matmul_transpose(v)
}
