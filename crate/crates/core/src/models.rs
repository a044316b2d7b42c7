//! Seeded generators for the simulation settings.
//!
//! Every generator draws from an explicit [`RngStream`], so identical
//! `(seed, stream_id)` pairs reproduce identical data on every platform.

use alloc::format;
use alloc::vec::Vec;

use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{param, Error, Result};
use crate::linalg::qr_orthonormalize;
use crate::matrix::{Matrix, OrthonormalBasis};

/// Identifies the sampling algorithms. Output is reproducible only between
/// builds reporting the same string.
pub const RNG_ALGORITHM: &str =
    "chacha20(splitmix64 key, 64-bit stream id) v1; normal: inverse cdf v1; poisson: inversion below 10, ptrs above v1";

/// ChaCha20 keystream addressed by `(seed, stream_id)`.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha20Rng,
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut key = [0u8; 32];
        let mut state = seed;
        for chunk in key.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        let mut rng = ChaCha20Rng::from_seed(key);
        rng.set_stream(stream_id);
        Self { seed, stream_id, rng }
    }

    /// A fresh stream under the same seed.
    pub fn derive(&self, stream_id: u64) -> Self {
        Self::new(self.seed, stream_id)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform on the open interval (0, 1).
    pub fn uniform(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    pub fn normal(&mut self) -> f64 {
        inverse_normal_cdf(self.uniform())
    }

    pub fn bernoulli(&mut self, theta: f64) -> bool {
        self.uniform() < theta
    }

    /// Poisson count with the given mean.
    pub fn poisson(&mut self, mean: f64) -> u64 {
        if mean <= 0.0 {
            0
        } else if mean < 10.0 {
            self.poisson_inversion(mean)
        } else {
            self.poisson_ptrs(mean)
        }
    }

    fn poisson_inversion(&mut self, mean: f64) -> u64 {
        let mut prob = libm::exp(-mean);
        let mut cdf = prob;
        let u = self.uniform();
        let mut k = 0u64;
        while u > cdf && k < 1000 {
            k += 1;
            prob *= mean / k as f64;
            cdf += prob;
        }
        k
    }

    /// Hörmann's transformed rejection with squeeze.
    fn poisson_ptrs(&mut self, mean: f64) -> u64 {
        let slam = libm::sqrt(mean);
        let loglam = libm::log(mean);
        let b = 0.931 + 2.53 * slam;
        let a = -0.059 + 0.02483 * b;
        let inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
        let vr = 0.9277 - 3.6224 / (b - 2.0);
        loop {
            let u = self.uniform() - 0.5;
            let v = self.uniform();
            let us = 0.5 - u.abs();
            let k = libm::floor((2.0 * a / us + b) * u + mean + 0.43);
            if us >= 0.07 && v <= vr {
                return k as u64;
            }
            if k < 0.0 || (us < 0.013 && v > us) {
                continue;
            }
            let lhs = libm::log(v) + libm::log(inv_alpha) - libm::log(a / (us * us) + b);
            let rhs = -mean + k * loglam - libm::lgamma(k + 1.0);
            if lhs <= rhs {
                return k as u64;
            }
        }
    }

    fn normal_matrix(&mut self, rows: usize, cols: usize) -> Matrix {
        Matrix::from_fn(rows, cols, |_, _| self.normal())
    }

    fn uniform_vec(&mut self, n: usize) -> Vec<f64> {
        (0..n).map(|_| self.uniform()).collect()
    }
}

/// Standard normal quantile: Acklam's rational approximation followed by one
/// Halley step against `erfc`.
fn inverse_normal_cdf(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969683028665376e1,
        2.209460984245205e2,
        -2.759285104469687e2,
        1.383577518672690e2,
        -3.066479806614716e1,
        2.506628277459239,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e1,
        1.615858368580409e2,
        -1.556989798598866e2,
        6.680131188771972e1,
        -1.328068155288572e1,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-3,
        -3.223964580411365e-1,
        -2.400758277161838,
        -2.549732539343734,
        4.374664141464968,
        2.938163982698783,
    ];
    const D: [f64; 4] = [7.784695709041462e-3, 3.224671290700398e-1, 2.445134137142996, 3.754408661907416];
    const P_LOW: f64 = 0.02425;

    let x = if p < P_LOW {
        let q = libm::sqrt(-2.0 * libm::log(p));
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = libm::sqrt(-2.0 * libm::log(1.0 - p));
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    let e = 0.5 * libm::erfc(-x / core::f64::consts::SQRT_2) - p;
    let u = e * libm::sqrt(2.0 * core::f64::consts::PI) * libm::exp(x * x / 2.0);
    x - u / (1.0 + x * u / 2.0)
}

/// Noise standard deviations for the spiked covariance model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SigmaProfile {
    /// `σ_i ~ Unif[0, 1]`.
    Uniform01,
    /// Variances `σ_k² = total · v_k^α / Σ v_i^α` with `v ~ Unif[0, 1]`.
    Alpha { alpha: f64, total: f64 },
}

impl SigmaProfile {
    /// The α-profile with total variance `0.1·p`.
    pub fn alpha(alpha: f64, p: usize) -> Self {
        SigmaProfile::Alpha { alpha, total: 0.1 * p as f64 }
    }

    /// Draws `p` standard deviations.
    pub fn draw(&self, p: usize, rng: &mut RngStream) -> Result<Vec<f64>> {
        match *self {
            SigmaProfile::Uniform01 => Ok(rng.uniform_vec(p)),
            SigmaProfile::Alpha { alpha, total } => {
                let var = variances_alpha(p, alpha, total, rng)?;
                Ok(var.into_iter().map(libm::sqrt).collect())
            }
        }
    }
}

/// Heteroskedastic noise variances `σ_k² = 0.1·p·v_k^α / Σ v_i^α`, which sum
/// to `0.1·p`; `α = 0` is the homoskedastic case.
pub fn sigma_profile_alpha(p: usize, alpha: f64, rng: &mut RngStream) -> Result<Vec<f64>> {
    variances_alpha(p, alpha, 0.1 * p as f64, rng)
}

fn variances_alpha(p: usize, alpha: f64, total: f64, rng: &mut RngStream) -> Result<Vec<f64>> {
    if !(alpha >= 0.0) || !alpha.is_finite() {
        return Err(param(format!("alpha must be finite and nonnegative, got {alpha}")));
    }
    if p == 0 {
        return Err(param("p must be positive"));
    }
    let w: Vec<f64> = rng.uniform_vec(p).into_iter().map(|v| libm::pow(v, alpha)).collect();
    let sum: f64 = w.iter().sum();
    Ok(w.into_iter().map(|x| total * (x / sum)).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpikedCovSpec {
    pub p: usize,
    pub n: usize,
    pub r: usize,
    /// Exponent on the row weights `w` in `U = QR(diag(w)^power · U₀)`.
    pub loading_weight_power: f64,
    pub sigma_profile: SigmaProfile,
}

impl SpikedCovSpec {
    pub fn new(p: usize, n: usize, r: usize, sigma_profile: SigmaProfile) -> Self {
        Self { p, n, r, loading_weight_power: 1.0, sigma_profile }
    }

    pub fn validate(&self) -> Result<()> {
        if self.r == 0 || self.p < self.r {
            return Err(param(format!("need p >= r >= 1, got p={}, r={}", self.p, self.r)));
        }
        if self.n < 2 {
            return Err(param("need n >= 2 samples"));
        }
        if let SigmaProfile::Alpha { alpha, total } = self.sigma_profile {
            if !(alpha >= 0.0) || !(total >= 0.0) {
                return Err(param("alpha and total variance must be nonnegative"));
            }
        }
        Ok(())
    }
}

/// `QR(diag(w)^power · U₀)` with `U₀` standard Gaussian (`p × r`) and
/// `w ~ Unif[0, 1]` scaling the rows.
pub fn gen_loading_matrix(p: usize, r: usize, weight_power: f64, rng: &mut RngStream) -> Result<OrthonormalBasis> {
    if r == 0 || p < r {
        return Err(param(format!("need p >= r >= 1, got p={p}, r={r}")));
    }
    let mut last = None;
    for _ in 0..2 {
        let u0 = rng.normal_matrix(p, r);
        let w = rng.uniform_vec(p);
        let a = Matrix::from_fn(p, r, |i, k| libm::pow(w[i], weight_power) * u0[(i, k)]);
        match qr_orthonormalize(&a) {
            Ok(q) => return Ok(q),
            Err(e) => last = Some(e),
        }
    }
    Err(last.expect("at least one attempt"))
}

/// `Y = U·diag(√λ)·Γ + E` with `Γ` standard Gaussian (`r × n`) and
/// `E_ik ~ N(0, σ_i²)`.
pub fn sample_spiked(u: &OrthonormalBasis, lambda: &[f64], sigma: &[f64], n: usize, rng: &mut RngStream) -> Result<Matrix> {
    let (p, r) = (u.p(), u.r());
    if lambda.len() != r || sigma.len() != p {
        return Err(param(format!(
            "expected {r} spike strengths and {p} noise levels, got {} and {}",
            lambda.len(),
            sigma.len()
        )));
    }
    if lambda.iter().any(|&l| !(l >= 0.0)) || sigma.iter().any(|&s| !(s >= 0.0)) {
        return Err(param("spike strengths and noise levels must be nonnegative"));
    }
    if n == 0 {
        return Err(param("need at least one sample"));
    }
    let gamma = rng.normal_matrix(r, n);
    let scaled = Matrix::from_fn(p, r, |i, k| u.matrix()[(i, k)] * libm::sqrt(lambda[k]));
    let signal = scaled.matmul(&gamma)?;
    Ok(Matrix::from_fn(p, n, |i, k| signal[(i, k)] + sigma[i] * rng.normal()))
}

/// Samples from `N(0, UΛUᵀ + τ(I − UUᵀ)) + N(0, diag(σ²))`: a covariance that
/// is only approximately rank `r`, with flat tail eigenvalue `τ`.
pub fn sample_approx_low_rank(
    u: &OrthonormalBasis,
    lambda: &[f64],
    tail: f64,
    sigma: &[f64],
    n: usize,
    rng: &mut RngStream,
) -> Result<Matrix> {
    if !(tail >= 0.0) {
        return Err(param("tail eigenvalue must be nonnegative"));
    }
    let mut y = sample_spiked(u, lambda, sigma, n, rng)?;
    if tail > 0.0 {
        let z = rng.normal_matrix(u.p(), n);
        let um = u.matrix();
        let proj = um.matmul(&um.transpose_matmul(&z)?)?;
        let t = libm::sqrt(tail);
        y = Matrix::from_fn(u.p(), n, |i, k| y[(i, k)] + t * (z[(i, k)] - proj[(i, k)]));
    }
    Ok(y)
}

/// Spiked-model sample with `Λ = I_r`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpikedSample {
    pub u: OrthonormalBasis,
    pub sigma: Vec<f64>,
    pub y: Matrix,
}

pub fn gen_spiked(spec: &SpikedCovSpec, rng: &mut RngStream) -> Result<SpikedSample> {
    spec.validate()?;
    let u = gen_loading_matrix(spec.p, spec.r, spec.loading_weight_power, rng)?;
    let sigma = spec.sigma_profile.draw(spec.p, rng)?;
    let ones = alloc::vec![1.0; spec.r];
    let y = sample_spiked(&u, &ones, &sigma, spec.n, rng)?;
    Ok(SpikedSample { u, sigma, y })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenoisingSpec {
    pub p1: usize,
    pub p2: usize,
    pub r: usize,
    pub sigma0: f64,
    pub signal_scale: f64,
}

impl DenoisingSpec {
    /// Signal scale defaults to `(p1·p2)^{1/4}`.
    pub fn new(p1: usize, p2: usize, r: usize, sigma0: f64) -> Self {
        let signal_scale = libm::pow((p1 * p2) as f64, 0.25);
        Self { p1, p2, r, sigma0, signal_scale }
    }

    pub fn validate(&self) -> Result<()> {
        if self.r == 0 || self.p1 < self.r || self.p2 < self.r {
            return Err(param(format!(
                "need p1, p2 >= r >= 1, got p1={}, p2={}, r={}",
                self.p1, self.p2, self.r
            )));
        }
        if !(self.sigma0 >= 0.0) || !self.sigma0.is_finite() {
            return Err(param("sigma0 must be finite and nonnegative"));
        }
        if !self.signal_scale.is_finite() {
            return Err(param("signal scale must be finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenoisingSample {
    pub x: Matrix,
    pub y: Matrix,
    pub u: OrthonormalBasis,
    pub v: OrthonormalBasis,
}

/// `X = s·UVᵀ` with `U = QR(diag(w)⁴·U₀)`, `V = QR(V₀)`, and
/// `Y = X + E`, `E_ij ~ N(0, σ₀²·(v1_i⁴·v2_j⁴)²)`.
pub fn gen_denoising(spec: &DenoisingSpec, rng: &mut RngStream) -> Result<DenoisingSample> {
    spec.validate()?;
    let (p1, p2, r) = (spec.p1, spec.p2, spec.r);
    let u0 = rng.normal_matrix(p1, r);
    let v0 = rng.normal_matrix(p2, r);
    let w = rng.uniform_vec(p1);
    let v1 = rng.uniform_vec(p1);
    let v2 = rng.uniform_vec(p2);
    let u = qr_orthonormalize(&Matrix::from_fn(p1, r, |i, k| libm::pow(w[i], 4.0) * u0[(i, k)]))?;
    let v = qr_orthonormalize(&v0)?;
    let x = u.matrix().matmul_transpose(v.matrix())?.scale(spec.signal_scale);
    let row: Vec<f64> = v1.iter().map(|&a| libm::pow(a, 4.0)).collect();
    let col: Vec<f64> = v2.iter().map(|&a| libm::pow(a, 4.0)).collect();
    let y = Matrix::from_fn(p1, p2, |i, j| x[(i, j)] + spec.sigma0 * row[i] * col[j] * rng.normal());
    Ok(DenoisingSample { x, y, u, v })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoissonSpec {
    pub p1: usize,
    pub p2: usize,
    pub r: usize,
    pub lambda_strength: f64,
}

impl PoissonSpec {
    pub fn validate(&self) -> Result<()> {
        if self.r == 0 || self.p1 < self.r || self.p2 < self.r {
            return Err(param(format!(
                "need p1, p2 >= r >= 1, got p1={}, p2={}, r={}",
                self.p1, self.p2, self.r
            )));
        }
        if !(self.lambda_strength > 0.0) || !self.lambda_strength.is_finite() {
            return Err(param("signal strength must be positive and finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoissonSample {
    pub x: Matrix,
    /// Counts, stored as floats.
    pub y: Matrix,
    /// Orthonormal basis of the column space of `x`.
    pub u: OrthonormalBasis,
}

/// `X = λ(p1·p2)^{1/4}·|diag(w)⁴U₀|·|V₀|ᵀ` and `Y_ij ~ Poisson(X_ij)`.
pub fn gen_poisson(spec: &PoissonSpec, rng: &mut RngStream) -> Result<PoissonSample> {
    spec.validate()?;
    let (p1, p2, r) = (spec.p1, spec.p2, spec.r);
    let u0 = rng.normal_matrix(p1, r);
    let v0 = rng.normal_matrix(p2, r);
    let w = rng.uniform_vec(p1);
    let uf = Matrix::from_fn(p1, r, |i, k| (libm::pow(w[i], 4.0) * u0[(i, k)]).abs());
    let vf = v0.map(f64::abs);
    let scale = spec.lambda_strength * libm::pow((p1 * p2) as f64, 0.25);
    let x = uf.matmul_transpose(&vf)?.scale(scale);
    // |V₀| has full column rank almost surely, so col(X) = col(|diag(w)⁴U₀|).
    let u = qr_orthonormalize(&uf)?;
    let y = Matrix::from_fn(p1, p2, |i, j| rng.poisson(x[(i, j)]) as f64);
    Ok(PoissonSample { x, y, u })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MissingSpec {
    pub base: DenoisingSpec,
    pub theta: f64,
}

impl MissingSpec {
    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        check_theta(self.theta)
    }
}

fn check_theta(theta: f64) -> Result<()> {
    if theta > 0.0 && theta < 1.0 {
        Ok(())
    } else {
        Err(param(format!("observation probability must lie in (0, 1), got {theta}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaskedSample {
    pub y_tilde: Matrix,
    /// 1 where observed, 0 where missing.
    pub r_mask: Matrix,
}

/// Keeps each entry independently with probability `theta`; missing entries
/// become zero.
pub fn apply_mask(y: &Matrix, theta: f64, rng: &mut RngStream) -> Result<MaskedSample> {
    check_theta(theta)?;
    let r_mask = Matrix::from_fn(y.rows(), y.cols(), |_, _| if rng.bernoulli(theta) { 1.0 } else { 0.0 });
    let y_tilde = Matrix::from_fn(y.rows(), y.cols(), |i, j| y[(i, j)] * r_mask[(i, j)]);
    Ok(MaskedSample { y_tilde, r_mask })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MissingSample {
    pub full: DenoisingSample,
    pub masked: MaskedSample,
}

pub fn gen_missing(spec: &MissingSpec, rng: &mut RngStream) -> Result<MissingSample> {
    spec.validate()?;
    let full = gen_denoising(&spec.base, rng)?;
    let masked = apply_mask(&full.y, spec.theta, rng)?;
    Ok(MissingSample { full, masked })
}

/// Guard used by callers that need every row observed at least once.
pub fn ensure_rows_observed(r_mask: &Matrix) -> Result<()> {
    for i in 0..r_mask.rows() {
        if r_mask.row(i).iter().all(|&m| m == 0.0) {
            return Err(Error::Degenerate(format!("row {i} has no observed entries")));
        }
    }
    Ok(())
}
