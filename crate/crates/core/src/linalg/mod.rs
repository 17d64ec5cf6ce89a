//! Dense symmetric linear algebra: eigendecomposition, square roots, subspace
//! alignment and distances, Fantope projection and entrywise soft-thresholding.
//!
//! All routines are generic over [`Scalar`] and operate on `ndarray` storage.
//! Everything here is a pure function of its inputs.

mod eigen;
mod fantope;
mod subspace;
mod svd;

use ndarray::{Array2, ArrayView2, Axis};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Result};
use crate::scalar::Scalar;

pub use eigen::{matrix_sqrt, sym_eigen, SymmetricEigen, DEFAULT_PSD_TOL};
pub use fantope::{fantope_project, soft_threshold};
pub use subspace::{procrustes_align, projection_distance_spectral, sin_theta_spectral, Procrustes};
pub use svd::{singular_values, svd, Svd};

/// Square symmetric matrix with finite entries.
///
/// Construction symmetrizes by averaging, so `a[i][j] == a[j][i]` holds bit-for-bit.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix<T: Scalar> {
    data: Array2<T>,
}

impl<T: Scalar> SymmetricMatrix<T> {
    pub fn new(mut data: Array2<T>) -> Result<Self> {
        let (r, c) = data.dim();
        if r == 0 || r != c {
            return Err(invalid(format!("symmetric matrix must be square and non-empty, got {r}x{c}")));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(invalid("matrix has non-finite entries"));
        }
        let half = T::of(0.5);
        for i in 0..r {
            for j in (i + 1)..r {
                let v = (data[[i, j]] + data[[j, i]]) * half;
                data[[i, j]] = v;
                data[[j, i]] = v;
            }
        }
        Ok(Self { data })
    }

    pub fn identity(dim: usize) -> Self {
        assert!(dim > 0, "dimension must be positive");
        Self { data: Array2::eye(dim) }
    }

    pub fn from_diag(diag: &[T]) -> Result<Self> {
        if diag.is_empty() {
            return Err(invalid("diagonal must be non-empty"));
        }
        Self::new(Array2::from_diag(&ndarray::Array1::from(diag.to_vec())))
    }

    pub fn from_rows(rows: &[&[T]]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(invalid("rows must form a square matrix"));
        }
        let flat: Vec<T> = rows.iter().flat_map(|r| r.iter().copied()).collect();
        let data = Array2::from_shape_vec((n, n), flat).map_err(|e| invalid(e.to_string()))?;
        Self::new(data)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[[i, j]]
    }

    #[inline]
    pub fn view(&self) -> ArrayView2<'_, T> {
        self.data.view()
    }

    pub fn into_inner(self) -> Array2<T> {
        self.data
    }

    pub fn diag(&self) -> Vec<T> {
        self.data.diag().to_vec()
    }

    pub fn trace(&self) -> T {
        self.data.diag().iter().copied().sum()
    }

    pub fn max_abs(&self) -> T {
        max_abs(&self.data.view())
    }

    pub fn frobenius(&self) -> T {
        frobenius_norm(&self.data.view())
    }

    /// Spectral norm, from the full eigendecomposition.
    pub fn spectral_norm(&self) -> Result<T> {
        let eig = sym_eigen(self)?;
        let v = eig.values.values();
        Ok(v[0].abs().max(v[v.len() - 1].abs()))
    }

    /// The principal submatrix on `indices` (in the given order).
    pub fn principal_submatrix(&self, indices: &[usize]) -> Result<Self> {
        if indices.is_empty() {
            return Err(invalid("principal submatrix needs at least one index"));
        }
        if let Some(&bad) = indices.iter().find(|&&i| i >= self.dim()) {
            return Err(invalid(format!("index {bad} out of range for dimension {}", self.dim())));
        }
        let m = indices.len();
        let data = Array2::from_shape_fn((m, m), |(a, b)| self.data[[indices[a], indices[b]]]);
        Ok(Self { data })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same_dim(other)?;
        Ok(Self { data: &self.data - &other.data })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_dim(other)?;
        Ok(Self { data: &self.data + &other.data })
    }

    pub fn scale(&self, factor: T) -> Self {
        Self { data: &self.data * factor }
    }

    /// Applies `perm` to rows and columns: `out[i][j] = self[perm[i]][perm[j]]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.dim() {
            return Err(invalid("permutation length must equal dimension"));
        }
        self.principal_submatrix(perm)
    }

    fn check_same_dim(&self, other: &Self) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(invalid(format!("dimension mismatch: {} vs {}", self.dim(), other.dim())));
        }
        Ok(())
    }

    /// Wraps data already known to be exactly symmetric.
    pub(crate) fn from_symmetric_unchecked(data: Array2<T>) -> Self {
        debug_assert_eq!(data.nrows(), data.ncols());
        Self { data }
    }
}

/// `rows x cols` matrix with orthonormal columns, `cols <= rows`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthonormalFrame<T: Scalar> {
    data: Array2<T>,
}

impl<T: Scalar> OrthonormalFrame<T> {
    /// Validates `||F^T F - I||_max <= 1e-8` (rescaled for the scalar type).
    pub fn new(data: Array2<T>) -> Result<Self> {
        let (p, k) = data.dim();
        if k == 0 || k > p {
            return Err(invalid(format!("frame shape {p}x{k} needs 1 <= cols <= rows")));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(invalid("frame has non-finite entries"));
        }
        let dev = orthonormality_defect(&data.view());
        if dev > T::tol(1e-8) {
            return Err(invalid(format!("columns are not orthonormal (defect {dev})")));
        }
        Ok(Self { data })
    }

    /// Columns `e_i` for each `i` in `indices`.
    pub fn standard_basis(rows: usize, indices: &[usize]) -> Result<Self> {
        let mut data = Array2::zeros((rows, indices.len()));
        for (c, &i) in indices.iter().enumerate() {
            if i >= rows {
                return Err(invalid(format!("basis index {i} out of range {rows}")));
            }
            data[[i, c]] = T::one();
        }
        Self::new(data)
    }

    /// Haar-distributed frame: Gram-Schmidt on a Gaussian matrix with the `R` diagonal made positive.
    pub fn random<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Result<Self> {
        if cols == 0 || cols > rows {
            return Err(invalid(format!("frame shape {rows}x{cols} needs 1 <= cols <= rows")));
        }
        loop {
            let g = Array2::from_shape_fn((rows, cols), |_| T::of(rng.sample::<f64, _>(StandardNormal)));
            if let Some(q) = orthonormalize_columns(g) {
                return Self::new(q);
            }
        }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.data.nrows()
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.data.ncols()
    }

    #[inline]
    pub fn view(&self) -> ArrayView2<'_, T> {
        self.data.view()
    }

    pub fn into_inner(self) -> Array2<T> {
        self.data
    }

    /// `F * Q` for a `cols x cols` orthogonal `Q`.
    pub fn rotated(&self, q: &ArrayView2<'_, T>) -> Result<Self> {
        if q.dim() != (self.cols(), self.cols()) {
            return Err(invalid("rotation must be cols x cols"));
        }
        Self::new(self.data.dot(q))
    }

    /// Orthogonal projector `F F^T`.
    pub fn projector(&self) -> SymmetricMatrix<T> {
        SymmetricMatrix::from_symmetric_unchecked(symmetric_gram(&self.data.t()))
    }

    pub(crate) fn from_trusted(data: Array2<T>) -> Self {
        Self { data }
    }
}

/// Eigenvalues sorted in descending order.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum<T: Scalar> {
    values: Vec<T>,
}

impl<T: Scalar> Spectrum<T> {
    pub fn new(values: Vec<T>) -> Result<Self> {
        if values.windows(2).any(|w| !(w[0] >= w[1])) {
            return Err(invalid("spectrum must be sorted in descending order"));
        }
        Ok(Self { values })
    }

    #[inline]
    pub fn values(&self) -> &[T] {
        &self.values
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn first(&self) -> Option<T> {
        self.values.first().copied()
    }

    pub fn last(&self) -> Option<T> {
        self.values.last().copied()
    }

    pub fn truncated(&self, len: usize) -> Self {
        Self { values: self.values[..len.min(self.values.len())].to_vec() }
    }
}

/// Largest absolute entry; 0 for an empty matrix.
pub fn max_abs<T: Scalar>(m: &ArrayView2<'_, T>) -> T {
    m.iter().fold(T::zero(), |acc, v| acc.max(v.abs()))
}

pub fn frobenius_norm<T: Scalar>(m: &ArrayView2<'_, T>) -> T {
    m.iter().map(|&v| v * v).sum::<T>().sqrt()
}

/// Maximum Euclidean row norm.
pub fn two_to_inf_norm<T: Scalar>(m: &ArrayView2<'_, T>) -> Result<T> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(invalid("2->inf norm of non-finite matrix"));
    }
    Ok(m
        .axis_iter(Axis(0))
        .map(|row| row.iter().map(|&v| v * v).sum::<T>().sqrt())
        .fold(T::zero(), T::max))
}

/// Largest singular value of an arbitrary dense matrix.
pub fn spectral_norm<T: Scalar>(m: &ArrayView2<'_, T>) -> Result<T> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(invalid("spectral norm of non-finite matrix"));
    }
    if m.is_empty() {
        return Ok(T::zero());
    }
    Ok(singular_values(m)?.first().copied().unwrap_or_else(T::zero))
}

/// `||F^T F - I||_max`.
pub(crate) fn orthonormality_defect<T: Scalar>(f: &ArrayView2<'_, T>) -> T {
    let g = f.t().dot(f);
    let mut dev = T::zero();
    for ((i, j), &v) in g.indexed_iter() {
        let target = if i == j { T::one() } else { T::zero() };
        dev = dev.max((v - target).abs());
    }
    dev
}

/// `A^T A` forced exactly symmetric (upper triangle mirrored).
pub(crate) fn symmetric_gram<T: Scalar>(a: &ArrayView2<'_, T>) -> Array2<T> {
    let mut g = a.t().dot(a);
    let n = g.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            g[[j, i]] = g[[i, j]];
        }
    }
    g
}

/// Two-pass modified Gram-Schmidt. Returns `None` when the columns are numerically dependent.
pub(crate) fn orthonormalize_columns<T: Scalar>(mut a: Array2<T>) -> Option<Array2<T>> {
    let k = a.ncols();
    for j in 0..k {
        let original = a.column(j).iter().map(|&v| v * v).sum::<T>().sqrt();
        for _pass in 0..2 {
            for i in 0..j {
                let dot: T = a.column(i).iter().zip(a.column(j).iter()).map(|(&x, &y)| x * y).sum();
                let qi = a.column(i).to_owned();
                a.column_mut(j).zip_mut_with(&qi, |y, &x| *y -= dot * x);
            }
        }
        let norm = a.column(j).iter().map(|&v| v * v).sum::<T>().sqrt();
        if !(norm > original * T::tol(1e-10)) || norm == T::zero() {
            return None;
        }
        a.column_mut(j).mapv_inplace(|v| v / norm);
    }
    Some(a)
}
