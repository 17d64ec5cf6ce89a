//! Sparsistent support selectors: the oracle, diagonal thresholding and
//! Fantope Projection and Selection.

mod fps;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::linalg::SymmetricMatrix;
use crate::model::SparseCovarianceModel;
use crate::scalar::Scalar;

pub use fps::{default_rho, fps_select, AdmmParams, FantopeAdmm, FantopeSolution, Residuals};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SelectorKind {
    Oracle,
    Diag,
    Fps,
}

impl SelectorKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Oracle => "oracle",
            Self::Diag => "diag",
            Self::Fps => "fps",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SelectionDiagnostics {
    /// Smallest selected diagonal entry (diagonal thresholding).
    pub threshold: Option<f64>,
    pub rho: Option<f64>,
    pub iterations: Option<usize>,
    pub primal_residual: Option<f64>,
    pub dual_residual: Option<f64>,
    pub converged: Option<bool>,
    /// Set when the primary rule produced an empty support and a fallback was used.
    pub fallback: Option<String>,
}

/// Estimated support `J_hat`: non-empty, strictly increasing, within `0..p`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SupportEstimate {
    indices: Vec<usize>,
    pub method: SelectorKind,
    pub diagnostics: SelectionDiagnostics,
}

impl SupportEstimate {
    pub fn new(indices: Vec<usize>, p: usize, method: SelectorKind) -> Result<Self> {
        if indices.is_empty() {
            return Err(invalid("support estimate must be non-empty"));
        }
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("support indices must be strictly increasing"));
        }
        if indices[indices.len() - 1] >= p {
            return Err(invalid(format!("support index out of range for p={p}")));
        }
        Ok(Self { indices, method, diagnostics: SelectionDiagnostics::default() })
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// `|J_hat symmetric-difference J|`.
    pub fn symmetric_difference(&self, truth: &[usize]) -> usize {
        let hits = self.indices.iter().filter(|i| truth.binary_search(i).is_ok()).count();
        self.indices.len() + truth.len() - 2 * hits
    }
}

/// Returns the true support; ignores the data.
pub fn oracle_select<T: Scalar>(model: &SparseCovarianceModel<T>) -> Result<SupportEstimate> {
    SupportEstimate::new(model.support.clone(), model.p, SelectorKind::Oracle)
}

/// The `s_target` largest diagonal entries (ties to the lower index), returned ascending.
pub fn diagonal_threshold_select<T: Scalar>(sigma_hat: &SymmetricMatrix<T>, s_target: usize) -> Result<SupportEstimate> {
    let p = sigma_hat.dim();
    if s_target == 0 || s_target > p {
        return Err(invalid(format!("s_target={s_target} must lie in 1..={p}")));
    }
    let diag = sigma_hat.diag();
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| diag[b].partial_cmp(&diag[a]).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b)));
    let threshold = diag[order[s_target - 1]];
    let mut chosen = order[..s_target].to_vec();
    chosen.sort_unstable();
    let mut est = SupportEstimate::new(chosen, p, SelectorKind::Diag)?;
    est.diagnostics.threshold = Some(threshold.to_f64_lossy());
    Ok(est)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_spiked_sparse_model, CoherenceProfile, ModelParams};

    fn diag(v: &[f64]) -> SymmetricMatrix<f64> {
        SymmetricMatrix::from_diag(v).unwrap()
    }

    #[test]
    fn oracle_returns_truth() {
        let params = ModelParams { p: 10, s: 2, k: 1, spikes: vec![3.0], bulk_level: 1.0, profile: CoherenceProfile::Flat };
        let m = build_spiked_sparse_model(&params, 0).unwrap();
        assert_eq!(oracle_select(&m).unwrap().indices(), &[0, 1]);
        let perm = [2, 4, 5, 0, 6, 8, 9, 1, 3, 7];
        let q = m.permuted(&perm).unwrap();
        assert_eq!(oracle_select(&q).unwrap().indices(), &[3, 7]);
    }

    #[test]
    fn diagonal_threshold_examples() {
        assert_eq!(diagonal_threshold_select(&diag(&[2.0, 1.0, 1.0, 2.0]), 2).unwrap().indices(), &[0, 3]);
        assert_eq!(diagonal_threshold_select(&diag(&[2.0, 1.0, 5.0]), 3).unwrap().indices(), &[0, 1, 2]);
        assert_eq!(diagonal_threshold_select(&diag(&[1.0, 1.0, 1.0]), 2).unwrap().indices(), &[0, 1]);
        assert!(diagonal_threshold_select(&diag(&[1.0, 1.0]), 0).is_err());
        assert!(diagonal_threshold_select(&diag(&[1.0, 1.0]), 3).is_err());
    }

    #[test]
    fn support_estimate_invariants() {
        assert!(SupportEstimate::new(vec![], 3, SelectorKind::Oracle).is_err());
        assert!(SupportEstimate::new(vec![1, 1], 3, SelectorKind::Oracle).is_err());
        assert!(SupportEstimate::new(vec![2, 1], 3, SelectorKind::Oracle).is_err());
        assert!(SupportEstimate::new(vec![3], 3, SelectorKind::Oracle).is_err());
        let e = SupportEstimate::new(vec![0, 2, 5], 6, SelectorKind::Diag).unwrap();
        assert_eq!(e.symmetric_difference(&[0, 1, 2]), 2);
    }
}
