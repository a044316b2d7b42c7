//! Dense matrices, orthonormal bases and corruption index sets.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

use crate::error::{param, Error, Result};

/// Dense real matrix stored row-major.
///
/// Every public constructor rejects NaN and infinite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    /// Builds a matrix from row-major data.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(param(format!("matrix dimensions must be positive, got {rows}x{cols}")));
        }
        if data.len() != rows * cols {
            return Err(param(format!(
                "expected {} entries for a {rows}x{cols} matrix, got {}",
                rows * cols,
                data.len()
            )));
        }
        if let Some(k) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row: k / cols, col: k % cols });
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from a slice of equally long rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(n * m);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != m {
                return Err(param(format!("row {i} has {} entries, expected {m}", r.len())));
            }
            data.extend_from_slice(r);
        }
        Self::new(n, m, data)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        debug_assert!(rows > 0 && cols > 0);
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Square diagonal matrix with `diag` on the diagonal.
    pub fn from_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    /// Builds a matrix entry by entry. The closure must return finite values.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        debug_assert!(data.iter().all(|v| v.is_finite()));
        Self { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    /// Matrix product `self · other`.
    pub fn matmul(&self, other: &Matrix) -> Result<Self> {
        if self.cols != other.rows {
            return Err(param(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let a_row = self.row(i);
            let o_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for (k, &a) in a_row.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                for (o, &b) in o_row.iter_mut().zip(other.row(k)) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `self · otherᵀ`, computed with row dot products.
    pub fn matmul_transpose(&self, other: &Matrix) -> Result<Self> {
        if self.cols != other.cols {
            return Err(param(format!(
                "cannot multiply {}x{} by the transpose of {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(Self::from_fn(self.rows, other.rows, |i, j| dot(self.row(i), other.row(j))))
    }

    /// `selfᵀ · other`.
    pub fn transpose_matmul(&self, other: &Matrix) -> Result<Self> {
        if self.rows != other.rows {
            return Err(param(format!(
                "cannot multiply the transpose of {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.cols, other.cols);
        for k in 0..self.rows {
            let a_row = self.row(k);
            let b_row = other.row(k);
            for (i, &a) in a_row.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let o_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (o, &b) in o_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn add(&self, other: &Matrix) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Matrix) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|v| v * s)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&v| f(v)).collect() }
    }

    fn zip_with(&self, other: &Matrix, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.shape() != other.shape() {
            return Err(param(format!(
                "shape mismatch: {}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect();
        Ok(Self { rows: self.rows, cols: self.cols, data })
    }

    pub fn frobenius_norm(&self) -> f64 {
        libm::sqrt(self.data.iter().map(|v| v * v).sum())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest |a_ij - a_ji| over off-diagonal pairs; `None` for non-square input.
    pub fn asymmetry(&self) -> Option<f64> {
        if !self.is_square() {
            return None;
        }
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in i + 1..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        Some(worst)
    }

    /// True when the matrix equals its transpose bit for bit.
    pub fn is_exactly_symmetric(&self) -> bool {
        self.asymmetry() == Some(0.0)
    }

    /// Columns `0..k` as a new `rows × k` matrix.
    pub fn leading_columns(&self, k: usize) -> Self {
        Self::from_fn(self.rows, k, |i, j| self[(i, j)])
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Maximum tolerated deviation of `UᵀU` from the identity.
pub const ORTHONORMAL_TOL: f64 = 1e-8;

/// A `p × r` matrix with orthonormal columns, `1 ≤ r ≤ p`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthonormalBasis {
    m: Matrix,
}

impl OrthonormalBasis {
    /// Validates orthonormality to within [`ORTHONORMAL_TOL`] (max-abs entry of `UᵀU − I`).
    pub fn new(m: Matrix) -> Result<Self> {
        if m.cols() > m.rows() {
            return Err(param(format!(
                "basis must have r <= p, got {}x{}",
                m.rows(),
                m.cols()
            )));
        }
        let gram = m.transpose_matmul(&m)?;
        let dev = orthonormality_defect(&gram);
        if dev > ORTHONORMAL_TOL {
            return Err(param(format!("columns are not orthonormal (max |UᵀU - I| = {dev:e})")));
        }
        Ok(Self { m })
    }

    pub(crate) fn from_matrix_unchecked(m: Matrix) -> Self {
        debug_assert!(m.cols() <= m.rows());
        Self { m }
    }

    /// `[I_r; 0]`.
    pub fn canonical(p: usize, r: usize) -> Result<Self> {
        if r == 0 || r > p {
            return Err(param(format!("need 1 <= r <= p, got p={p}, r={r}")));
        }
        Ok(Self { m: Matrix::from_fn(p, r, |i, j| if i == j { 1.0 } else { 0.0 }) })
    }

    #[inline]
    pub fn p(&self) -> usize {
        self.m.rows()
    }

    #[inline]
    pub fn r(&self) -> usize {
        self.m.cols()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.m
    }

    pub fn into_matrix(self) -> Matrix {
        self.m
    }

    /// The projector `UUᵀ`.
    pub fn projector(&self) -> Matrix {
        self.m.matmul_transpose(&self.m).expect("conforming shapes")
    }

    /// Squared Euclidean norm of every row, `‖e_iᵀU‖²`.
    pub fn row_norms_sq(&self) -> Vec<f64> {
        (0..self.p()).map(|i| self.m.row(i).iter().map(|v| v * v).sum()).collect()
    }

    /// Right-multiplies by an `r × r` matrix assumed orthogonal.
    pub fn rotate(&self, o: &Matrix) -> Result<Self> {
        let m = self.m.matmul(o)?;
        Self::new(m)
    }
}

pub(crate) fn orthonormality_defect(gram: &Matrix) -> f64 {
    let mut dev = 0.0f64;
    for i in 0..gram.rows() {
        for j in 0..gram.cols() {
            let target = if i == j { 1.0 } else { 0.0 };
            dev = dev.max((gram[(i, j)] - target).abs());
        }
    }
    dev
}

/// A set 𝒢 of `(row, col)` positions in a `p1 × p2` matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorruptionSet {
    p1: usize,
    p2: usize,
    pairs: BTreeSet<(usize, usize)>,
}

impl CorruptionSet {
    pub fn new(p1: usize, p2: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut set = BTreeSet::new();
        for (i, j) in pairs {
            if i >= p1 || j >= p2 {
                return Err(param(format!("index ({i}, {j}) outside {p1}x{p2}")));
            }
            set.insert((i, j));
        }
        Ok(Self { p1, p2, pairs: set })
    }

    pub fn empty(p1: usize, p2: usize) -> Self {
        Self { p1, p2, pairs: BTreeSet::new() }
    }

    /// The diagonal positions of a `p × p` matrix.
    pub fn diagonal(p: usize) -> Self {
        Self { p1: p, p2: p, pairs: (0..p).map(|i| (i, i)).collect() }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.p1, self.p2)
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.pairs.contains(&(i, j))
    }

    /// Pairs in lexicographic order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.pairs.iter().copied()
    }

    /// `b = max(max row count, max column count)`; zero for the empty set.
    pub fn sparsity(&self) -> usize {
        let mut rows = vec![0usize; self.p1];
        let mut cols = vec![0usize; self.p2];
        for &(i, j) in &self.pairs {
            rows[i] += 1;
            cols[j] += 1;
        }
        rows.into_iter().chain(cols).max().unwrap_or(0)
    }

    /// `(i, j) ∈ 𝒢 ⇒ (j, i) ∈ 𝒢` (and the set is square).
    pub fn is_symmetric(&self) -> bool {
        self.p1 == self.p2 && self.pairs.iter().all(|&(i, j)| self.pairs.contains(&(j, i)))
    }

    /// True when 𝒢 is exactly the diagonal of a square matrix.
    pub fn is_diagonal(&self) -> bool {
        self.p1 == self.p2
            && self.pairs.len() == self.p1
            && self.pairs.iter().all(|&(i, j)| i == j)
    }

    pub fn with_symmetric_closure(&self) -> Self {
        let mut pairs = self.pairs.clone();
        pairs.extend(self.pairs.iter().map(|&(i, j)| (j, i)));
        Self { p1: self.p1, p2: self.p2, pairs }
    }
}
