//! Fantope Projection and Selection, solved by scaled ADMM on the split `H = Z`:
//!
//! ```text
//! maximize <Sigma_hat, H> - rho ||Z||_1   subject to  H in Fantope(k),  H = Z
//! ```

use serde::{Deserialize, Serialize};

use super::{diagonal_threshold_select, SelectorKind, SupportEstimate};
use crate::error::{invalid, Result};
use crate::linalg::{fantope_project, soft_threshold, SymmetricMatrix};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdmmParams {
    pub step_size: f64,
    pub max_iter: usize,
    pub tol_abs: f64,
    pub tol_rel: f64,
    /// Diagonal entries of `Z` above this are in the support.
    pub support_eps: f64,
}

impl Default for AdmmParams {
    fn default() -> Self {
        Self { step_size: 1.0, max_iter: 2000, tol_abs: 1e-6, tol_rel: 1e-5, support_eps: 1e-8 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residuals {
    /// `||H - Z||_F`
    pub primal: f64,
    /// `step_size * ||Z - Z_prev||_F`
    pub dual: f64,
    /// `tol_abs * p + tol_rel * max(||H||_F, ||Z||_F)`
    pub threshold: f64,
}

impl Residuals {
    pub fn converged(&self) -> bool {
        self.primal <= self.threshold && self.dual <= self.threshold
    }
}

#[derive(Debug, Clone)]
pub struct FantopeSolution<T: Scalar> {
    /// Last Fantope iterate.
    pub h: SymmetricMatrix<T>,
    /// Last soft-thresholded iterate; exactly sparse.
    pub z: SymmetricMatrix<T>,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Residuals after every iteration.
    pub history: Vec<Residuals>,
}

/// ADMM state; [`FantopeAdmm::step`] performs one H / Z / dual update.
#[derive(Debug, Clone)]
pub struct FantopeAdmm<T: Scalar> {
    sigma_over_step: SymmetricMatrix<T>,
    k: usize,
    z_level: T,
    params: AdmmParams,
    h: SymmetricMatrix<T>,
    z: SymmetricMatrix<T>,
    dual: SymmetricMatrix<T>,
    iterations: usize,
}

impl<T: Scalar> FantopeAdmm<T> {
    pub fn new(sigma_hat: &SymmetricMatrix<T>, k: usize, rho: f64, params: AdmmParams) -> Result<Self> {
        let p = sigma_hat.dim();
        if k == 0 || k > p {
            return Err(invalid(format!("FPS rank k={k} must lie in 1..={p}")));
        }
        if !(params.step_size > 0.0) || !params.step_size.is_finite() {
            return Err(invalid("ADMM step size must be positive"));
        }
        if !(rho >= 0.0) || !rho.is_finite() {
            return Err(invalid("FPS penalty must be finite and >= 0"));
        }
        let zero = SymmetricMatrix::from_symmetric_unchecked(ndarray::Array2::zeros((p, p)));
        Ok(Self {
            sigma_over_step: sigma_hat.scale(T::of(1.0 / params.step_size)),
            k,
            z_level: T::of(rho / params.step_size),
            params,
            h: zero.clone(),
            z: zero.clone(),
            dual: zero,
            iterations: 0,
        })
    }

    pub fn step(&mut self) -> Result<Residuals> {
        let target = self.z.sub(&self.dual)?.add(&self.sigma_over_step)?;
        self.h = fantope_project(&target, self.k)?;
        let z_next = soft_threshold(&self.h.add(&self.dual)?, self.z_level)?;
        let dz = z_next.sub(&self.z)?.frobenius();
        self.z = z_next;
        let gap = self.h.sub(&self.z)?;
        self.dual = self.dual.add(&gap)?;
        self.iterations += 1;

        let p = self.h.dim() as f64;
        let scale = self.h.frobenius().max(self.z.frobenius()).to_f64_lossy();
        Ok(Residuals {
            primal: gap.frobenius().to_f64_lossy(),
            dual: self.params.step_size * dz.to_f64_lossy(),
            threshold: self.params.tol_abs * p + self.params.tol_rel * scale,
        })
    }

    pub fn h(&self) -> &SymmetricMatrix<T> {
        &self.h
    }

    pub fn z(&self) -> &SymmetricMatrix<T> {
        &self.z
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    /// Iterates until both residuals pass or `max_iter` is hit.
    pub fn solve(mut self) -> Result<FantopeSolution<T>> {
        let mut history = Vec::new();
        let mut converged = false;
        while self.iterations < self.params.max_iter {
            let r = self.step()?;
            history.push(r);
            if r.converged() {
                converged = true;
                break;
            }
        }
        let last = history.last().copied();
        Ok(FantopeSolution {
            h: self.h,
            z: self.z,
            primal_residual: last.map_or(f64::NAN, |r| r.primal),
            dual_residual: last.map_or(f64::NAN, |r| r.dual),
            iterations: self.iterations,
            converged,
            history,
        })
    }
}

/// `scale * sqrt(log p / n) * max_i Sigma_hat_ii`.
pub fn default_rho<T: Scalar>(sigma_hat: &SymmetricMatrix<T>, n: usize, scale: f64) -> f64 {
    let p = sigma_hat.dim() as f64;
    let max_diag = sigma_hat.diag().into_iter().fold(T::zero(), T::max).to_f64_lossy();
    scale * (p.ln() / n.max(1) as f64).sqrt() * max_diag
}

/// Runs FPS and reads the support off the diagonal of `Z`.
///
/// Non-convergence is reported through `converged`, never as an error. An empty
/// support falls back to diagonal thresholding with `s_target = k`.
pub fn fps_select<T: Scalar>(
    sigma_hat: &SymmetricMatrix<T>,
    k: usize,
    rho: f64,
    params: AdmmParams,
) -> Result<(SupportEstimate, FantopeSolution<T>)> {
    let solution = FantopeAdmm::new(sigma_hat, k, rho, params)?.solve()?;
    let eps = T::of(params.support_eps);
    let picked: Vec<usize> = (0..sigma_hat.dim()).filter(|&i| solution.z.get(i, i) > eps).collect();

    let mut estimate = if picked.is_empty() {
        let mut fallback = diagonal_threshold_select(sigma_hat, k)?;
        fallback.method = SelectorKind::Fps;
        fallback.diagnostics.fallback = Some(format!("empty FPS support; diagonal thresholding with s_target={k}"));
        fallback
    } else {
        SupportEstimate::new(picked, sigma_hat.dim(), SelectorKind::Fps)?
    };
    let d = &mut estimate.diagnostics;
    d.rho = Some(rho);
    d.iterations = Some(solution.iterations);
    d.primal_residual = Some(solution.primal_residual);
    d.dual_residual = Some(solution.dual_residual);
    d.converged = Some(solution.converged);
    Ok((estimate, solution))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::sym_eigen;
    use crate::model::{build_spiked_sparse_model, CoherenceProfile, ModelParams};
    use crate::selectors::oracle_select;

    fn block_model() -> crate::model::SparseCovarianceModel<f64> {
        let params = ModelParams { p: 4, s: 2, k: 1, spikes: vec![5.0], bulk_level: 1.0, profile: CoherenceProfile::Flat };
        build_spiked_sparse_model(&params, 0).unwrap()
    }

    #[test]
    fn noiseless_block_recovers_support() {
        let m = block_model();
        let (est, sol) = fps_select(&m.sigma, 1, 0.1, AdmmParams::default()).unwrap();
        assert!(sol.converged);
        assert_eq!(est.indices(), oracle_select(&m).unwrap().indices());
        let uut = m.u.view().dot(&m.u.view().t());
        let dist = crate::linalg::frobenius_norm(&(&sol.h.view() - &uut).view());
        assert!(dist <= 0.05, "||H - uu^T||_F = {dist}");
    }

    #[test]
    fn penalty_free_gives_top_eigenprojector() {
        let s = SymmetricMatrix::from_diag(&[3.0, 2.0, 1.0]).unwrap();
        let (est, sol) = fps_select(&s, 1, 0.0, AdmmParams::default()).unwrap();
        assert_eq!(est.indices(), &[0]);
        let v = sym_eigen(&s).unwrap().vectors.view().column(0).to_owned();
        for i in 0..3 {
            for j in 0..3 {
                approx::assert_abs_diff_eq!(sol.z.get(i, j), v[i] * v[j], epsilon = 1e-4);
            }
        }
    }

    #[test]
    fn huge_penalty_falls_back_to_diagonal() {
        // While the scaled dual is below rho / step, every Z iterate is exactly zero.
        let m = block_model();
        let rho = m.sigma.max_abs() * 4.0 * 10.0;
        let budget = AdmmParams { max_iter: 50, ..Default::default() };
        let (est, sol) = fps_select(&m.sigma, 1, rho, budget).unwrap();
        assert!(sol.z.view().iter().all(|&v| v == 0.0));
        assert!(!sol.converged);
        assert!(est.diagnostics.fallback.is_some());
        assert_eq!(est.indices(), &[0]);
        assert_eq!(est.method, SelectorKind::Fps);
    }

    #[test]
    fn huge_penalty_full_solve_is_diagonal() {
        // The Fantope forces trace k, so the l1-dominated optimum is a diagonal matrix, not zero.
        let m = block_model();
        let rho = m.sigma.max_abs() * 4.0 * 10.0;
        let (_, sol) = fps_select(&m.sigma, 1, rho, AdmmParams::default()).unwrap();
        assert!(sol.converged);
        approx::assert_abs_diff_eq!(sol.z.trace(), 1.0, epsilon = 1e-4);
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    assert_eq!(sol.z.get(i, j), 0.0);
                }
            }
        }
    }

    #[test]
    fn iterates_stay_in_fantope() {
        let params = ModelParams { p: 12, s: 4, k: 2, spikes: vec![6.0, 4.0], bulk_level: 1.0, profile: CoherenceProfile::Random };
        let m = build_spiked_sparse_model(&params, 3).unwrap();
        let x = crate::sampling::sample_data(&m, 300, crate::sampling::DesignDistribution::Gaussian, 8).unwrap();
        let s = crate::sampling::empirical_covariance(&x).unwrap();
        let mut admm = FantopeAdmm::new(&s, 2, default_rho(&s, 300, 2.0), AdmmParams::default()).unwrap();
        for _ in 0..200 {
            let r = admm.step().unwrap();
            let h = admm.h();
            approx::assert_abs_diff_eq!(h.trace(), 2.0, epsilon = 1e-8);
            let eig = sym_eigen(h).unwrap();
            assert!(eig.values.last().unwrap() >= -1e-9);
            assert!(eig.values.first().unwrap() <= 1.0 + 1e-9);
            if r.converged() {
                break;
            }
        }
    }

    #[test]
    fn residuals_shrink_on_converging_runs() {
        let m = block_model();
        let (_, sol) = fps_select(&m.sigma, 1, 0.3, AdmmParams::default()).unwrap();
        assert!(sol.converged);
        let combined = |r: &Residuals| r.primal + r.dual;
        let n = sol.history.len();
        for mth in 1..=n / 10 {
            assert!(combined(&sol.history[10 * mth - 1]) <= combined(&sol.history[mth - 1]));
        }
    }

    #[test]
    fn invalid_parameters() {
        let s = SymmetricMatrix::from_diag(&[3.0, 2.0]).unwrap();
        assert!(fps_select(&s, 3, 0.1, AdmmParams::default()).is_err());
        let bad = AdmmParams { step_size: 0.0, ..Default::default() };
        assert!(fps_select(&s, 1, 0.1, bad).is_err());
        assert!(fps_select(&s, 1, -1.0, AdmmParams::default()).is_err());
    }
}
