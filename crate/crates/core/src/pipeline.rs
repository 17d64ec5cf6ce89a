//! The debiased estimator: eigendecompose `Sigma_hat` restricted to the selected
//! support and zero-pad the leading eigenvectors back to `p` rows.

use ndarray::Array2;

use crate::error::{invalid, Result};
use crate::linalg::{sym_eigen, OrthonormalFrame, Spectrum, SymmetricMatrix};
use crate::scalar::Scalar;
use crate::selectors::SupportEstimate;

#[derive(Debug, Clone)]
pub struct SubspaceEstimate<T: Scalar> {
    /// `p x k`, rows outside the support are exactly zero.
    pub u_tilde: OrthonormalFrame<T>,
    pub support: SupportEstimate,
    /// Leading `k` eigenvalues of `Sigma_hat[J_hat, J_hat]`.
    pub lambda_tilde: Spectrum<T>,
    /// `(k+1)`-th eigenvalue of the submatrix; `None` when `|J_hat| = k`.
    pub lambda_tilde_k_plus_1: Option<T>,
}

impl<T: Scalar> SubspaceEstimate<T> {
    pub fn k(&self) -> usize {
        self.lambda_tilde.len()
    }

    pub fn lambda_tilde_k(&self) -> T {
        self.lambda_tilde.last().expect("k >= 1")
    }
}

pub fn estimate_sparse_subspace<T: Scalar>(
    sigma_hat: &SymmetricMatrix<T>,
    support: SupportEstimate,
    k: usize,
) -> Result<SubspaceEstimate<T>> {
    let p = sigma_hat.dim();
    if k == 0 {
        return Err(invalid("k must be at least 1"));
    }
    if k > support.len() {
        return Err(invalid(format!("k={k} exceeds the selected support size {}", support.len())));
    }
    if support.indices().last().is_some_and(|&i| i >= p) {
        return Err(invalid("support index out of range for Sigma_hat"));
    }
    let sub = sigma_hat.principal_submatrix(support.indices())?;
    let eig = sym_eigen(&sub)?;
    let vectors = eig.vectors.view();

    let mut u = Array2::zeros((p, k));
    for (local, &global) in support.indices().iter().enumerate() {
        for c in 0..k {
            u[[global, c]] = vectors[[local, c]];
        }
    }
    let values = eig.values.values();
    Ok(SubspaceEstimate {
        u_tilde: OrthonormalFrame::new(u)?,
        support,
        lambda_tilde: eig.values.truncated(k),
        lambda_tilde_k_plus_1: values.get(k).copied(),
    })
}
