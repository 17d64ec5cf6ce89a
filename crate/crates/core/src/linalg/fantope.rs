use ndarray::Array2;

use super::{sym_eigen, SymmetricMatrix};
use crate::error::{invalid, Error, Result};
use crate::scalar::Scalar;

/// Euclidean projection onto the Fantope `{H : 0 <= H <= I, tr H = k}`.
///
/// With `A = V diag(lambda) V^T`, the projection is `V diag(gamma) V^T` where
/// `gamma_i = clamp(lambda_i - theta, 0, 1)` and `theta` solves `sum gamma_i = k`.
/// `theta` is found by bisection on `[lambda_min - 2, lambda_max]`.
pub fn fantope_project<T: Scalar>(a: &SymmetricMatrix<T>, k: usize) -> Result<SymmetricMatrix<T>> {
    let dim = a.dim();
    if k == 0 || k > dim {
        return Err(invalid(format!("Fantope rank k={k} must lie in 1..={dim}")));
    }
    let eig = sym_eigen(a)?;
    let lambda = eig.values.values();
    let theta = water_level(lambda, k)?;
    let gamma: Vec<T> = lambda.iter().map(|&l| clamp_unit(l - theta)).collect();

    let v = eig.vectors.view();
    let mut scaled = v.to_owned();
    for (mut col, &g) in scaled.columns_mut().into_iter().zip(&gamma) {
        col *= g;
    }
    SymmetricMatrix::new(scaled.dot(&v.t()))
}

/// Entrywise `sign(m) * max(|m| - rho, 0)`.
pub fn soft_threshold<T: Scalar>(m: &SymmetricMatrix<T>, rho: T) -> Result<SymmetricMatrix<T>> {
    if !(rho >= T::zero()) || !rho.is_finite() {
        return Err(invalid(format!("soft-threshold level must be finite and >= 0, got {rho}")));
    }
    let out: Array2<T> = m.view().mapv(|x| {
        let shrunk = x.abs() - rho;
        if shrunk > T::zero() {
            shrunk.copysign(x)
        } else {
            T::zero()
        }
    });
    Ok(SymmetricMatrix::from_symmetric_unchecked(out))
}

#[inline]
fn clamp_unit<T: Scalar>(x: T) -> T {
    x.max(T::zero()).min(T::one())
}

fn capped_sum<T: Scalar>(lambda: &[T], theta: T) -> T {
    lambda.iter().map(|&l| clamp_unit(l - theta)).sum()
}

// Bisection on the monotone map theta -> sum clamp(lambda_i - theta, 0, 1).
fn water_level<T: Scalar>(lambda: &[T], k: usize) -> Result<T> {
    let target = T::of(k as f64);
    let (hi0, lo0) = (lambda[0], lambda[lambda.len() - 1] - T::of(2.0));
    // `lambda_min - 1` would do in exact arithmetic, but rounding can leave the sum just below k = dim.
    let mut lo = lo0;
    let mut hi = hi0;
    if !(capped_sum(lambda, lo) >= target && capped_sum(lambda, hi) <= target) {
        return Err(Error::Internal("Fantope water level is not bracketed".into()));
    }
    let scale = T::one().max(lo.abs()).max(hi.abs());
    let width = T::of(1e-12).max(T::of(4.0) * T::epsilon() * scale);
    for _ in 0..200 {
        if hi - lo <= width {
            break;
        }
        let mid = lo + (hi - lo) * T::of(0.5);
        if capped_sum(lambda, mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mid = lo + (hi - lo) * T::of(0.5);
    Ok(refine(lambda, k, mid, lo, hi))
}

// The capped sum is piecewise linear; solve exactly on the piece containing `theta`.
fn refine<T: Scalar>(lambda: &[T], k: usize, theta: T, lo: T, hi: T) -> T {
    let mut ones = 0usize;
    let mut active = 0usize;
    let mut active_sum = T::zero();
    for &l in lambda {
        let g = l - theta;
        if g >= T::one() {
            ones += 1;
        } else if g > T::zero() {
            active += 1;
            active_sum += l;
        }
    }
    if active == 0 {
        return theta;
    }
    let exact = (active_sum + T::of(ones as f64) - T::of(k as f64)) / T::of(active as f64);
    let err = |t: T| (capped_sum(lambda, t) - T::of(k as f64)).abs();
    if exact >= lo && exact <= hi && err(exact) <= err(theta) {
        exact
    } else {
        theta
    }
}
