//! Alignment and distances between `k`-dimensional subspaces.

use ndarray::{Array2, ArrayView2};

use super::{spectral_norm, svd, sym_eigen, OrthonormalFrame, SymmetricMatrix};
use crate::error::{invalid, Result};
use crate::scalar::Scalar;

/// Frobenius-optimal rotation `W*` and the aligned frame `B W*`.
#[derive(Debug, Clone)]
pub struct Procrustes<T: Scalar> {
    pub w_star: Array2<T>,
    pub aligned: Array2<T>,
}

fn check_shapes<T: Scalar>(a: &OrthonormalFrame<T>, b: &OrthonormalFrame<T>) -> Result<()> {
    if a.view().dim() != b.view().dim() {
        return Err(invalid(format!(
            "frame shapes differ: {:?} vs {:?}",
            a.view().dim(),
            b.view().dim()
        )));
    }
    Ok(())
}

/// Rotates `b` toward `a`: `W* = W1 W2^T` where `B^T A = W1 D W2^T`, minimizing `||A - B W||_F`.
pub fn procrustes_align<T: Scalar>(a: &OrthonormalFrame<T>, b: &OrthonormalFrame<T>) -> Result<Procrustes<T>> {
    check_shapes(a, b)?;
    let cross = b.view().t().dot(&a.view());
    let dec = svd(&cross.view())?;
    let w_star = dec.u.dot(&dec.v.t());
    let aligned = b.view().dot(&w_star);
    Ok(Procrustes { w_star, aligned })
}

/// Largest principal-angle sine, `||(I - A A^T) B||`.
///
/// Computed from the residual of `B` after projecting onto `span(A)` rather than
/// from `sqrt(1 - sigma_min(A^T B)^2)`, which loses half the digits near zero.
pub fn sin_theta_spectral<T: Scalar>(a: &OrthonormalFrame<T>, b: &OrthonormalFrame<T>) -> Result<T> {
    check_shapes(a, b)?;
    let av = a.view();
    let bv = b.view();
    let residual = &bv - &av.dot(&av.t().dot(&bv));
    Ok(spectral_norm(&residual.view())?.min(T::one()))
}

/// `||A A^T - B B^T||` in spectral norm.
///
/// Rows where both frames vanish contribute nothing, so the eigenproblem is
/// restricted to the union of their nonzero rows.
pub fn projection_distance_spectral<T: Scalar>(a: &OrthonormalFrame<T>, b: &OrthonormalFrame<T>) -> Result<T> {
    check_shapes(a, b)?;
    let av = a.view();
    let bv = b.view();
    let live: Vec<usize> = (0..a.rows())
        .filter(|&i| nonzero_row(&av, i) || nonzero_row(&bv, i))
        .collect();
    if live.is_empty() {
        return Ok(T::zero());
    }
    let ra = av.select(ndarray::Axis(0), &live);
    let rb = bv.select(ndarray::Axis(0), &live);
    let diff = ra.dot(&ra.t()) - rb.dot(&rb.t());
    let eig = sym_eigen(&SymmetricMatrix::new(diff)?)?;
    let v = eig.values.values();
    Ok(v[0].abs().max(v[v.len() - 1].abs()))
}

fn nonzero_row<T: Scalar>(m: &ArrayView2<'_, T>, i: usize) -> bool {
    m.row(i).iter().any(|&x| x != T::zero())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn frame(a: Array2<f64>) -> OrthonormalFrame<f64> {
        OrthonormalFrame::new(a).unwrap()
    }

    fn angle30(p: usize) -> OrthonormalFrame<f64> {
        let t = 30f64.to_radians();
        let mut a = Array2::zeros((p, 1));
        a[[0, 0]] = t.cos();
        a[[1, 0]] = t.sin();
        frame(a)
    }

    #[test]
    fn procrustes_identity_and_sign_flip() {
        let a = frame(array![[0.6], [0.8], [0.0]]);
        let p = procrustes_align(&a, &a).unwrap();
        approx::assert_abs_diff_eq!(p.w_star[[0, 0]], 1.0, epsilon = 1e-14);
        let b = frame(array![[-0.6], [-0.8], [0.0]]);
        let p = procrustes_align(&a, &b).unwrap();
        approx::assert_abs_diff_eq!(p.w_star[[0, 0]], -1.0, epsilon = 1e-14);
        assert!((&p.aligned - &a.view()).iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn procrustes_quarter_turn() {
        let a = frame(array![[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]]);
        let b = frame(array![[0.0, -1.0], [1.0, 0.0], [0.0, 0.0]]);
        let p = procrustes_align(&a, &b).unwrap();
        // Brute force over rotations and reflections of the plane: the exact fit is
        // W = [[0, 1], [-1, 0]], and B W = A.
        let mut best = f64::INFINITY;
        let mut best_w = Array2::zeros((2, 2));
        for step in 0..3600 {
            let th = (step as f64) * std::f64::consts::TAU / 3600.0;
            let (c, s) = (th.cos(), th.sin());
            for w in [array![[c, -s], [s, c]], array![[c, s], [s, -c]]] {
                let d = crate::linalg::frobenius_norm(&(&a.view() - &b.view().dot(&w)).view());
                if d < best {
                    best = d;
                    best_w = w;
                }
            }
        }
        assert!(best < 1e-12);
        assert!((&p.w_star - &best_w).iter().all(|v| v.abs() < 1e-12));
        assert!((&p.aligned - &a.view()).iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn procrustes_shape_mismatch() {
        let a = OrthonormalFrame::<f64>::standard_basis(3, &[0]).unwrap();
        let b = OrthonormalFrame::<f64>::standard_basis(4, &[0]).unwrap();
        assert!(procrustes_align(&a, &b).is_err());
        assert!(sin_theta_spectral(&a, &b).is_err());
        assert!(projection_distance_spectral(&a, &b).is_err());
    }

    #[test]
    fn sin_theta_examples() {
        let e1 = OrthonormalFrame::<f64>::standard_basis(2, &[0]).unwrap();
        let e2 = OrthonormalFrame::<f64>::standard_basis(2, &[1]).unwrap();
        assert_eq!(sin_theta_spectral(&e1, &e1).unwrap(), 0.0);
        approx::assert_abs_diff_eq!(sin_theta_spectral(&e1, &e2).unwrap(), 1.0, epsilon = 1e-15);
        approx::assert_abs_diff_eq!(sin_theta_spectral(&e1, &angle30(2)).unwrap(), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn projection_distance_examples() {
        let e1 = OrthonormalFrame::<f64>::standard_basis(2, &[0]).unwrap();
        let e2 = OrthonormalFrame::<f64>::standard_basis(2, &[1]).unwrap();
        assert_eq!(projection_distance_spectral(&e1, &e1).unwrap(), 0.0);
        approx::assert_abs_diff_eq!(projection_distance_spectral(&e1, &e2).unwrap(), 1.0, epsilon = 1e-15);
        let e1_3 = OrthonormalFrame::<f64>::standard_basis(3, &[0]).unwrap();
        approx::assert_abs_diff_eq!(
            projection_distance_spectral(&e1_3, &angle30(3)).unwrap(),
            0.5,
            epsilon = 1e-14
        );
    }

    #[test]
    fn restricted_rows_match_full_eigenproblem() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let mut a = Array2::zeros((12, 2));
        let mut b = Array2::zeros((12, 2));
        let fa = OrthonormalFrame::<f64>::random(5, 2, &mut rng).unwrap();
        let fb = OrthonormalFrame::<f64>::random(5, 2, &mut rng).unwrap();
        for (i, r) in [1usize, 3, 4, 7, 9].iter().enumerate() {
            a.row_mut(*r).assign(&fa.view().row(i));
        }
        for (i, r) in [0usize, 3, 4, 7, 11].iter().enumerate() {
            b.row_mut(*r).assign(&fb.view().row(i));
        }
        let (a, b) = (frame(a), frame(b));
        let full = SymmetricMatrix::new(a.view().dot(&a.view().t()) - b.view().dot(&b.view().t())).unwrap();
        let expected = full.spectral_norm().unwrap();
        approx::assert_abs_diff_eq!(projection_distance_spectral(&a, &b).unwrap(), expected, epsilon = 1e-13);
    }
}
