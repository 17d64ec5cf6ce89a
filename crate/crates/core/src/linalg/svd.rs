//! One-sided Jacobi (Hestenes) singular value decomposition.
//!
//! Only used on thin matrices (`p x k` frames and `k x k` cross products), where
//! Jacobi gives high relative accuracy at negligible cost.

use ndarray::{Array1, Array2, ArrayView2};

use crate::error::{invalid, Error, Result};
use crate::scalar::Scalar;

/// Thin SVD `A = U diag(sigma) V^T` with `r = min(m, n)` columns in `U` and `V`.
///
/// `U` and `V` always have orthonormal columns, including directions with zero
/// singular value (those are completed to an orthonormal set).
#[derive(Debug, Clone)]
pub struct Svd<T: Scalar> {
    pub u: Array2<T>,
    pub sigma: Array1<T>,
    pub v: Array2<T>,
}

const MAX_SWEEPS: usize = 80;

pub fn svd<T: Scalar>(a: &ArrayView2<'_, T>) -> Result<Svd<T>> {
    let (m, n) = a.dim();
    if m == 0 || n == 0 {
        return Err(invalid("SVD of an empty matrix"));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(invalid("SVD of non-finite matrix"));
    }
    if m < n {
        let t = svd(&a.t())?;
        return Ok(Svd { u: t.v, sigma: t.sigma, v: t.u });
    }

    let mut cols: Vec<Vec<T>> = (0..n).map(|j| a.column(j).to_vec()).collect();
    let mut vcols: Vec<Vec<T>> = (0..n)
        .map(|j| (0..n).map(|i| if i == j { T::one() } else { T::zero() }).collect())
        .collect();
    let eps = T::epsilon();
    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for i in 0..n {
            for j in (i + 1)..n {
                let (alpha, beta, gamma) = cols[i].iter().zip(&cols[j]).fold(
                    (T::zero(), T::zero(), T::zero()),
                    |(a, b, g), (&x, &y)| (a + x * x, b + y * y, g + x * y),
                );
                if gamma == T::zero() || gamma.abs() <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (T::of(2.0) * gamma);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                rotate(&mut cols, i, j, c, s);
                rotate(&mut vcols, i, j, c, s);
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Internal("one-sided Jacobi SVD did not converge".into()));
    }

    let norms: Vec<T> = cols.iter().map(|c| c.iter().map(|&x| x * x).sum::<T>().sqrt()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| norms[y].partial_cmp(&norms[x]).unwrap_or(std::cmp::Ordering::Equal));

    let largest = norms[order[0]];
    let negligible = largest * T::of(m as f64) * eps;
    let mut u = Array2::zeros((m, n));
    let mut v = Array2::zeros((n, n));
    let mut sigma = Array1::zeros(n);
    let mut deficient = Vec::new();
    for (dst, &src) in order.iter().enumerate() {
        let s = norms[src];
        sigma[dst] = s;
        for r in 0..n {
            v[[r, dst]] = vcols[src][r];
        }
        if s > negligible && s > T::zero() {
            for r in 0..m {
                u[[r, dst]] = cols[src][r] / s;
            }
        } else {
            deficient.push(dst);
        }
    }
    if !deficient.is_empty() {
        complete_columns(&mut u, &deficient);
    }
    Ok(Svd { u, sigma, v })
}

/// Singular values, descending.
pub fn singular_values<T: Scalar>(a: &ArrayView2<'_, T>) -> Result<Vec<T>> {
    Ok(svd(a)?.sigma.to_vec())
}

fn rotate<T: Scalar>(cols: &mut [Vec<T>], i: usize, j: usize, c: T, s: T) {
    let (head, tail) = cols.split_at_mut(j);
    for (x, y) in head[i].iter_mut().zip(tail[0].iter_mut()) {
        let (xi, yj) = (*x, *y);
        *x = c * xi - s * yj;
        *y = s * xi + c * yj;
    }
}

// Fill the listed columns with unit vectors orthogonal to every other column.
fn complete_columns<T: Scalar>(u: &mut Array2<T>, missing: &[usize]) {
    let m = u.nrows();
    let mut candidate = 0;
    for &col in missing {
        loop {
            assert!(candidate < m, "cannot complete an orthonormal set");
            let mut e = Array1::zeros(m);
            e[candidate] = T::one();
            candidate += 1;
            for _pass in 0..2 {
                for c in 0..u.ncols() {
                    if c == col || (missing.contains(&c) && u.column(c).iter().all(|&x| x == T::zero())) {
                        continue;
                    }
                    let dot: T = u.column(c).dot(&e);
                    e.zip_mut_with(&u.column(c), |x, &q| *x -= dot * q);
                }
            }
            let norm = e.dot(&e).sqrt();
            if norm > T::of(0.5) {
                u.column_mut(col).assign(&(e / norm));
                break;
            }
        }
    }
}
