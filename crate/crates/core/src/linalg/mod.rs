//! Dense linear algebra: SVD, QR, symmetric eigenvalues and the structural
//! operators used by the estimators.

mod ops;
mod qr;
mod svd;
mod tridiag;

pub use ops::{
    construct_incoherent_basis, diag_part, frobenius_norm, gamma_part, mask_part, off_diagonal,
    spectral_norm, symmetric_eigenvalues,
};
pub use qr::qr_orthonormalize;
pub use svd::{rank_r_truncation, singular_values, svd_top_r, SvdFactors, GAP_WARNING_RATIO};

pub(crate) use svd::symmetric_eigenpairs;
