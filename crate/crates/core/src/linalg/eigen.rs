//! Symmetric eigendecomposition by Householder tridiagonalization followed by
//! the implicit QL iteration (the EISPACK `tred2` / `tql2` pair).

use ndarray::Array2;

use super::{OrthonormalFrame, Spectrum, SymmetricMatrix};
use crate::error::{invalid, Error, Result};
use crate::scalar::Scalar;

pub const DEFAULT_PSD_TOL: f64 = 1e-10;

/// `M = V diag(values) V^T`, eigenvalues descending.
///
/// Each eigenvector is signed so its largest-magnitude entry is positive; entries
/// within a few ulps of the maximum count as tied and the first one wins.
#[derive(Debug, Clone)]
pub struct SymmetricEigen<T: Scalar> {
    pub values: Spectrum<T>,
    pub vectors: OrthonormalFrame<T>,
}

impl<T: Scalar> SymmetricEigen<T> {
    /// `V diag(values) V^T`.
    pub fn reconstruct(&self) -> Array2<T> {
        let v = self.vectors.view();
        let mut scaled = v.to_owned();
        for (mut col, &l) in scaled.columns_mut().into_iter().zip(self.values.values()) {
            col *= l;
        }
        scaled.dot(&v.t())
    }
}

pub fn sym_eigen<T: Scalar>(m: &SymmetricMatrix<T>) -> Result<SymmetricEigen<T>> {
    let n = m.dim();
    if m.view().iter().any(|v| !v.is_finite()) {
        return Err(invalid("eigendecomposition of non-finite matrix"));
    }
    let mut v: Vec<T> = m.view().iter().copied().collect();
    let mut d = vec![T::zero(); n];
    let mut e = vec![T::zero(); n];
    tred2(n, &mut v, &mut d, &mut e);
    tql2(n, &mut v, &mut d, &mut e)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[b].partial_cmp(&d[a]).unwrap_or(std::cmp::Ordering::Equal));

    let mut vectors = Array2::zeros((n, n));
    let tie = T::of(64.0) * T::epsilon();
    for (dst, &src) in order.iter().enumerate() {
        let col: Vec<T> = (0..n).map(|r| v[r * n + src]).collect();
        let peak = col.iter().fold(T::zero(), |acc, x| acc.max(x.abs()));
        let lead = col
            .iter()
            .position(|x| x.abs() >= peak * (T::one() - tie))
            .unwrap_or(0);
        let sign = if col[lead] < T::zero() { -T::one() } else { T::one() };
        for (r, x) in col.into_iter().enumerate() {
            vectors[[r, dst]] = sign * x;
        }
    }
    let values = Spectrum::new(order.iter().map(|&i| d[i]).collect())?;
    Ok(SymmetricEigen { values, vectors: OrthonormalFrame::from_trusted(vectors) })
}

/// Symmetric PSD square root; eigenvalues in `[-psd_tol, 0)` are clamped to zero.
pub fn matrix_sqrt<T: Scalar>(m: &SymmetricMatrix<T>, psd_tol: T) -> Result<SymmetricMatrix<T>> {
    let eig = sym_eigen(m)?;
    if let Some(min) = eig.values.last() {
        if min < -psd_tol {
            return Err(Error::NotPsd {
                eigenvalue: min.to_f64_lossy(),
                tolerance: psd_tol.to_f64_lossy(),
            });
        }
    }
    let roots: Vec<T> = eig.values.values().iter().map(|&l| l.max(T::zero()).sqrt()).collect();
    let v = eig.vectors.view();
    let mut scaled = v.to_owned();
    for (mut col, &r) in scaled.columns_mut().into_iter().zip(&roots) {
        col *= r;
    }
    SymmetricMatrix::new(scaled.dot(&v.t()))
}

// Householder reduction to tridiagonal form. On exit `v` holds the accumulated
// orthogonal transform (row-major), `d` the diagonal and `e[1..]` the subdiagonal.
fn tred2<T: Scalar>(n: usize, v: &mut [T], d: &mut [T], e: &mut [T]) {
    let at = |r: usize, c: usize| r * n + c;
    for j in 0..n {
        d[j] = v[at(n - 1, j)];
    }
    for i in (1..n).rev() {
        let mut scale = T::zero();
        let mut h = T::zero();
        for &dk in d.iter().take(i) {
            scale += dk.abs();
        }
        if scale == T::zero() {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[at(i - 1, j)];
                v[at(i, j)] = T::zero();
                v[at(j, i)] = T::zero();
            }
        } else {
            for dk in d.iter_mut().take(i) {
                *dk /= scale;
                h += *dk * *dk;
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > T::zero() {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = T::zero();
            }
            for j in 0..i {
                f = d[j];
                v[at(j, i)] = f;
                g = e[j] + v[at(j, j)] * f;
                for k in (j + 1)..i {
                    g += v[at(k, j)] * d[k];
                    e[k] += v[at(k, j)] * f;
                }
                e[j] = g;
            }
            f = T::zero();
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v[at(k, j)] -= f * e[k] + g * d[k];
                }
                d[j] = v[at(i - 1, j)];
                v[at(i, j)] = T::zero();
            }
        }
        d[i] = h;
    }
    for i in 0..n.saturating_sub(1) {
        v[at(n - 1, i)] = v[at(i, i)];
        v[at(i, i)] = T::one();
        let h = d[i + 1];
        if h != T::zero() {
            for k in 0..=i {
                d[k] = v[at(k, i + 1)] / h;
            }
            for j in 0..=i {
                let mut g = T::zero();
                for k in 0..=i {
                    g += v[at(k, i + 1)] * v[at(k, j)];
                }
                for k in 0..=i {
                    v[at(k, j)] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[at(k, i + 1)] = T::zero();
        }
    }
    for j in 0..n {
        d[j] = v[at(n - 1, j)];
        v[at(n - 1, j)] = T::zero();
    }
    v[at(n - 1, n - 1)] = T::one();
    e[0] = T::zero();
}

// Implicit QL on the tridiagonal (d, e), accumulating rotations into `v`.
fn tql2<T: Scalar>(n: usize, v: &mut [T], d: &mut [T], e: &mut [T]) -> Result<()> {
    let at = |r: usize, c: usize| r * n + c;
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = T::zero();

    let eps = T::epsilon();
    let two = T::of(2.0);
    let max_sweeps = 64 * n.max(1);
    let mut f = T::zero();
    let mut tst1 = T::zero();
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 && e[m].abs() > eps * tst1 {
            m += 1;
        }
        if m > l {
            let mut sweeps = 0;
            loop {
                sweeps += 1;
                if sweeps > max_sweeps {
                    return Err(Error::Internal("tridiagonal QL iteration did not converge".into()));
                }
                let g = d[l];
                let mut p = (d[l + 1] - g) / (two * e[l]);
                let mut r = p.hypot(T::one());
                if p < T::zero() {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = T::one();
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = T::zero();
                let mut s2 = T::zero();
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    for k in 0..n {
                        let vk1 = v[at(k, i + 1)];
                        let vk = v[at(k, i)];
                        v[at(k, i + 1)] = s * vk + c * vk1;
                        v[at(k, i)] = c * vk - s * vk1;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if !(e[l].abs() > eps * tst1) {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = T::zero();
    }
    if d.iter().any(|x| !x.is_finite()) {
        return Err(Error::Internal("eigenvalues became non-finite".into()));
    }
    Ok(())
}
