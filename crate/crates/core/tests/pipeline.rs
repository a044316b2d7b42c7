use hpca_core::estimators::{diagonal_deletion_estimator, hetero_pca, regular_svd_estimator, sample_covariance};
use hpca_core::linalg::{construct_incoherent_basis, qr_orthonormalize, rank_r_truncation};
use hpca_core::metrics::sin_theta;
use hpca_core::models::{gen_spiked, SigmaProfile, SpikedCovSpec};
use hpca_core::{HeteroPcaConfig, Matrix, OrthonormalBasis, RngStream};
use proptest::prelude::*;

fn low_rank_plus_diag(u: &OrthonormalBasis, spikes: &[f64], diag: &[f64]) -> Matrix {
    let m = u.matrix();
    Matrix::from_fn(m.rows(), m.rows(), |i, j| {
        let s: f64 = (0..spikes.len()).map(|k| spikes[k] * m[(i, k)] * m[(j, k)]).sum();
        if i == j { s + diag[i] } else { s }
    })
}

#[test]
fn generators_are_reproducible_per_stream() {
    let spec = SpikedCovSpec::new(30, 20, 2, SigmaProfile::Uniform01);
    let a = gen_spiked(&spec, &mut RngStream::new(5, 3)).unwrap();
    let b = gen_spiked(&spec, &mut RngStream::new(5, 3)).unwrap();
    let c = gen_spiked(&spec, &mut RngStream::new(5, 4)).unwrap();
    assert_eq!(a, b);
    assert_ne!(a.y, c.y);
}

#[test]
fn spiked_pipeline_orders_the_estimators() {
    let spec = SpikedCovSpec::new(60, 2000, 2, SigmaProfile::alpha(4.0, 60));
    let s = gen_spiked(&spec, &mut RngStream::new(11, 0)).unwrap();
    let cov = sample_covariance(&s.y).unwrap();
    let het = hetero_pca(&cov, &HeteroPcaConfig::new(2)).unwrap();
    let e_het = sin_theta(&het.basis, &s.u).unwrap();
    let e_svd = sin_theta(&regular_svd_estimator(&cov, 2).unwrap(), &s.u).unwrap();
    let e_dd = sin_theta(&diagonal_deletion_estimator(&cov, 2).unwrap(), &s.u).unwrap();
    assert!(e_het < e_svd, "{e_het} vs {e_svd}");
    assert!(e_het <= e_dd + 1e-12, "{e_het} vs {e_dd}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn any_diagonal_is_removed_for_incoherent_low_rank(
        diag in prop::collection::vec(0.0f64..5.0, 24),
        s1 in 1.0f64..4.0,
        ratio in 0.5f64..1.0,
    ) {
        // well-conditioned only: a weak second spike is swamped by −Δ-shift
        let s2 = ratio * s1;
        let u = construct_incoherent_basis(24, 2).unwrap();
        let m = low_rank_plus_diag(&u, &[s1, s2], &diag);
        let res = hetero_pca(&m, &HeteroPcaConfig::new(2).with_max_iterations(5000).with_tolerance(1e-14)).unwrap();
        prop_assert!(sin_theta(&res.basis, &u).unwrap() < 1e-6);
    }

    #[test]
    fn truncation_keeps_an_exact_rank_r_matrix(
        entries in prop::collection::vec(-1.0f64..1.0, 30),
        spikes in prop::collection::vec(0.5f64..3.0, 3),
    ) {
        let u = qr_orthonormalize(&Matrix::new(10, 3, entries).unwrap());
        prop_assume!(u.is_ok());
        let m = low_rank_plus_diag(&u.unwrap(), &spikes, &[0.0; 10]);
        let t = rank_r_truncation(&m, 3).unwrap();
        prop_assert!(t.sub(&m).unwrap().max_abs() <= 1e-12 * m.max_abs().max(1.0));
    }
}
