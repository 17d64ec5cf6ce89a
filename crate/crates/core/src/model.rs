//! Ground-truth sparse spiked covariance models and the checkable assumptions on them.

use std::f64::consts::TAU;

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::linalg::{two_to_inf_norm, OrthonormalFrame, Spectrum, SymmetricMatrix};
use crate::scalar::Scalar;

/// How the leading eigenvectors spread their mass over the support.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoherenceProfile {
    /// Every support row has norm exactly `sqrt(k/s)` (maximally incoherent).
    Flat,
    /// Haar-random orthonormal columns on the support.
    Random,
}

#[derive(Debug, Clone)]
pub struct ModelParams<T: Scalar> {
    pub p: usize,
    pub s: usize,
    pub k: usize,
    pub spikes: Vec<T>,
    pub bulk_level: T,
    pub profile: CoherenceProfile,
}

/// `Sigma = U diag(spikes) U^T + bulk (I - U U^T)` with `U` supported on `J`.
#[derive(Debug, Clone)]
pub struct SparseCovarianceModel<T: Scalar> {
    pub p: usize,
    pub s: usize,
    pub k: usize,
    /// Ascending support indices, `|J| = s`.
    pub support: Vec<usize>,
    pub u: OrthonormalFrame<T>,
    pub spikes: Spectrum<T>,
    pub bulk_level: T,
    pub sigma: SymmetricMatrix<T>,
    pub kappa: T,
}

/// Builds a model with `J = {0, .., s-1}`; requires `min(spikes) > bulk_level >= 0`.
pub fn build_spiked_sparse_model<T: Scalar>(params: &ModelParams<T>, seed: u64) -> Result<SparseCovarianceModel<T>> {
    build(params, seed, true)
}

/// Like [`build_spiked_sparse_model`] but admits `min(spikes) == bulk_level`.
///
/// Zero-gap models are not identifiable; they exist so that the eigengap checks
/// can be exercised on a failing input.
pub fn build_diagnostic_model<T: Scalar>(params: &ModelParams<T>, seed: u64) -> Result<SparseCovarianceModel<T>> {
    build(params, seed, false)
}

fn build<T: Scalar>(params: &ModelParams<T>, seed: u64, strict_gap: bool) -> Result<SparseCovarianceModel<T>> {
    let ModelParams { p, s, k, ref spikes, bulk_level, profile } = *params;
    if k == 0 || k >= s || s > p {
        return Err(invalid(format!("need 1 <= k < s <= p, got p={p}, s={s}, k={k}")));
    }
    if spikes.len() != k {
        return Err(invalid(format!("expected {k} spike eigenvalues, got {}", spikes.len())));
    }
    if spikes.iter().any(|v| !v.is_finite()) || !bulk_level.is_finite() {
        return Err(invalid("spike and bulk levels must be finite"));
    }
    let spikes = Spectrum::new(spikes.clone())
        .map_err(|_| invalid("spike eigenvalues must be in descending order"))?;
    if bulk_level < T::zero() {
        return Err(invalid("bulk level must be nonnegative"));
    }
    let smallest = spikes.last().expect("k >= 1");
    if (strict_gap && !(smallest > bulk_level)) || smallest < bulk_level {
        return Err(invalid(format!(
            "smallest spike {smallest} must exceed the bulk level {bulk_level}"
        )));
    }

    let block = match profile {
        CoherenceProfile::Flat => flat_block::<T>(s, k),
        CoherenceProfile::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            OrthonormalFrame::<T>::random(s, k, &mut rng)?.into_inner()
        }
    };
    let mut u = Array2::zeros((p, k));
    u.slice_mut(ndarray::s![..s, ..]).assign(&block);
    let u = OrthonormalFrame::new(u)?;

    let lifted: Vec<T> = spikes.values().iter().map(|&l| l - bulk_level).collect();
    let mut scaled = u.view().to_owned();
    for (mut col, &d) in scaled.columns_mut().into_iter().zip(&lifted) {
        col *= d;
    }
    let mut sigma = scaled.dot(&u.view().t());
    for i in 0..p {
        sigma[[i, i]] += bulk_level;
    }
    let sigma = SymmetricMatrix::new(sigma)?;
    let kappa = spikes.values()[0] / smallest;
    Ok(SparseCovarianceModel {
        p,
        s,
        k,
        support: (0..s).collect(),
        u,
        spikes,
        bulk_level,
        sigma,
        kappa,
    })
}

// Columns from the real Fourier basis on s points: the constant vector (odd k) and
// cos/sin pairs of frequencies 1, 2, ... Each pair contributes 2/s to every squared
// row norm, so all rows have norm sqrt(k/s).
fn flat_block<T: Scalar>(s: usize, k: usize) -> Array2<T> {
    let mut block = Array2::zeros((s, k));
    let mut col = 0;
    if k % 2 == 1 {
        block.column_mut(0).fill(T::of(1.0 / (s as f64).sqrt()));
        col = 1;
    }
    let amp = (2.0 / s as f64).sqrt();
    let mut freq = 1;
    while col < k {
        for t in 0..s {
            let angle = TAU * (freq * t) as f64 / s as f64;
            block[[t, col]] = T::of(amp * angle.cos());
            block[[t, col + 1]] = T::of(amp * angle.sin());
        }
        col += 2;
        freq += 1;
    }
    block
}

impl<T: Scalar> SparseCovarianceModel<T> {
    pub fn lambda_1(&self) -> T {
        self.spikes.values()[0]
    }

    pub fn lambda_k(&self) -> T {
        self.spikes.values()[self.k - 1]
    }

    /// `lambda_{k+1}(Sigma)`, the bulk level.
    pub fn lambda_k_plus_1(&self) -> T {
        self.bulk_level
    }

    pub fn eigengap(&self) -> T {
        self.lambda_k() - self.lambda_k_plus_1()
    }

    pub fn u_two_to_inf(&self) -> T {
        two_to_inf_norm(&self.u.view()).expect("model frame is finite")
    }

    /// `U_J`, the `s x k` support block.
    pub fn u_support_block(&self) -> Array2<T> {
        self.u.view().select(ndarray::Axis(0), &self.support)
    }

    /// Relabels coordinates: new coordinate `i` is old coordinate `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let p = self.p;
        let mut seen = vec![false; p];
        if perm.len() != p || perm.iter().any(|&i| i >= p || std::mem::replace(&mut seen[i], true)) {
            return Err(invalid("not a permutation of 0..p"));
        }
        let u = OrthonormalFrame::new(self.u.view().select(ndarray::Axis(0), perm))?;
        let sigma = self.sigma.permuted(perm)?;
        let in_support: Vec<bool> = (0..p).map(|i| self.support.binary_search(&i).is_ok()).collect();
        let support = (0..p).filter(|&i| in_support[perm[i]]).collect();
        Ok(Self { u, sigma, support, ..self.clone() })
    }

    /// Uniform random relabeling drawn from `seed`.
    pub fn permuted_seeded(&self, seed: u64) -> Result<Self> {
        let mut perm: Vec<usize> = (0..self.p).collect();
        perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        self.permuted(&perm)
    }
}

/// Constants that the asymptotic assumptions leave unspecified.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssumptionConstants {
    /// Multiplier on the concentration term of the eigengap condition.
    pub c: f64,
    /// Slack in `2 lambda_{k+1} < (1 - eps) lambda_k`.
    pub eps: f64,
    /// Incoherence constant in `||U||_{2->inf} <= c_inc sqrt(k/s)`.
    pub c_inc: f64,
}

impl Default for AssumptionConstants {
    fn default() -> Self {
        Self { c: 1.0, eps: 1.0 / 32.0, c_inc: 3.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionReport {
    /// `s log(p) / n < 1` and `k < s`.
    pub dims_ok: bool,
    /// `s log(p) / n`.
    pub dims_margin: f64,
    /// Sparsistency depends on the selector and the data; it is only measured empirically.
    pub sparsistency_checkable: bool,
    pub eigengap_ok: bool,
    /// `lambda_k / 8 - [C lambda_1 (sqrt(s/n) + sqrt(log p / n)) + lambda_{k+1} / 8]`.
    pub eigengap_slack: f64,
    /// `2 lambda_{k+1} < (1 - eps) lambda_k`.
    pub ratio_ok: bool,
    pub incoherence_ok: bool,
    /// `||U||_{2->inf} / sqrt(k/s)`.
    pub incoherence_ratio: f64,
    /// `k <= sqrt(s)`.
    pub k_vs_sqrt_s_ok: bool,
}

/// Evaluates the dimension, eigenvalue and incoherence conditions. Never fails.
pub fn check_assumptions<T: Scalar>(
    model: &SparseCovarianceModel<T>,
    n: usize,
    constants: &AssumptionConstants,
) -> AssumptionReport {
    let n_f = n.max(1) as f64;
    let (p, s, k) = (model.p as f64, model.s as f64, model.k as f64);
    let l1 = model.lambda_1().to_f64_lossy();
    let lk = model.lambda_k().to_f64_lossy();
    let lk1 = model.lambda_k_plus_1().to_f64_lossy();
    let log_p = p.ln();

    let dims_margin = s * log_p / n_f;
    let lhs = constants.c * l1 * ((s / n_f).sqrt() + (log_p / n_f).sqrt()) + lk1 / 8.0;
    let eigengap_slack = lk / 8.0 - lhs;
    let incoherence_ratio = model.u_two_to_inf().to_f64_lossy() / (k / s).sqrt();
    AssumptionReport {
        dims_ok: dims_margin < 1.0 && model.k < model.s,
        dims_margin,
        sparsistency_checkable: false,
        eigengap_ok: eigengap_slack >= 0.0 && lk > lk1,
        eigengap_slack,
        ratio_ok: 2.0 * lk1 < (1.0 - constants.eps) * lk,
        incoherence_ok: incoherence_ratio <= constants.c_inc,
        incoherence_ratio,
        k_vs_sqrt_s_ok: k <= s.sqrt(),
    }
}
