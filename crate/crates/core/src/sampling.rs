//! Subgaussian designs `X = Y Sigma^{1/2}` and the sample covariance.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::linalg::{matrix_sqrt, symmetric_gram, SymmetricMatrix, DEFAULT_PSD_TOL};
use crate::model::SparseCovarianceModel;
use crate::scalar::Scalar;

/// Law of the independent coordinates of `Y`; each has mean 0 and variance 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DesignDistribution {
    Gaussian,
    /// Uniform on `{-1, +1}`.
    Rademacher,
    /// Uniform on `[-sqrt(3), sqrt(3)]`.
    Uniform,
}

impl DesignDistribution {
    pub fn name(self) -> &'static str {
        match self {
            Self::Gaussian => "gaussian",
            Self::Rademacher => "rademacher",
            Self::Uniform => "uniform",
        }
    }

    fn draw<R: Rng + ?Sized>(self, rng: &mut R) -> f64 {
        match self {
            Self::Gaussian => rng.sample(StandardNormal),
            Self::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            Self::Uniform => {
                let half = 3f64.sqrt();
                rng.random_range(-half..=half)
            }
        }
    }
}

/// `n x p` observations, one per row.
#[derive(Debug, Clone)]
pub struct DataMatrix<T: Scalar> {
    pub entries: Array2<T>,
    pub seed: u64,
}

impl<T: Scalar> DataMatrix<T> {
    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    pub fn p(&self) -> usize {
        self.entries.ncols()
    }
}

/// `n x p` matrix of i.i.d. draws from `dist`, filled row by row from a ChaCha8 stream.
pub fn sample_latent<T: Scalar>(n: usize, p: usize, dist: DesignDistribution, seed: u64) -> Array2<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Array2::from_shape_simple_fn((n, p), || T::of(dist.draw(&mut rng)))
}

/// Holds `Sigma^{1/2}` so repeated draws from one model skip the square root.
#[derive(Debug, Clone)]
pub struct DesignSampler<T: Scalar> {
    sqrt_sigma: SymmetricMatrix<T>,
}

impl<T: Scalar> DesignSampler<T> {
    pub fn new(model: &SparseCovarianceModel<T>) -> Result<Self> {
        Self::from_covariance(&model.sigma)
    }

    pub fn from_covariance(sigma: &SymmetricMatrix<T>) -> Result<Self> {
        Ok(Self { sqrt_sigma: matrix_sqrt(sigma, T::of(DEFAULT_PSD_TOL))? })
    }

    pub fn sqrt_sigma(&self) -> &SymmetricMatrix<T> {
        &self.sqrt_sigma
    }

    pub fn sample(&self, n: usize, dist: DesignDistribution, seed: u64) -> Result<DataMatrix<T>> {
        Ok(self.sample_with_latent(n, dist, seed)?.1)
    }

    /// Returns the latent `Y` together with `X = Y Sigma^{1/2}`.
    pub fn sample_with_latent(
        &self,
        n: usize,
        dist: DesignDistribution,
        seed: u64,
    ) -> Result<(Array2<T>, DataMatrix<T>)> {
        if n == 0 {
            return Err(invalid("sample size must be at least 1"));
        }
        let y = sample_latent::<T>(n, self.sqrt_sigma.dim(), dist, seed);
        let x = y.dot(&self.sqrt_sigma.view());
        Ok((y, DataMatrix { entries: x, seed }))
    }
}

/// Draws `n` observations from `model`. Deterministic in `(model, n, dist, seed)`.
pub fn sample_data<T: Scalar>(
    model: &SparseCovarianceModel<T>,
    n: usize,
    dist: DesignDistribution,
    seed: u64,
) -> Result<DataMatrix<T>> {
    DesignSampler::new(model)?.sample(n, dist, seed)
}

/// Method-of-moments estimate `(1/n) X^T X` (no centering: the design has mean zero).
pub fn empirical_covariance<T: Scalar>(x: &DataMatrix<T>) -> Result<SymmetricMatrix<T>> {
    if x.n() == 0 || x.p() == 0 {
        return Err(invalid("empirical covariance needs a non-empty data matrix"));
    }
    if x.entries.iter().any(|v| !v.is_finite()) {
        return Err(invalid("data matrix has non-finite entries"));
    }
    let mut g = symmetric_gram(&x.entries.view());
    g /= T::of(x.n() as f64);
    Ok(SymmetricMatrix::from_symmetric_unchecked(g))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_spiked_sparse_model, CoherenceProfile, ModelParams};
    use ndarray::array;

    #[test]
    fn identity_covariance_returns_latent() {
        let sampler = DesignSampler::from_covariance(&SymmetricMatrix::<f64>::identity(5)).unwrap();
        let (y, x) = sampler.sample_with_latent(40, DesignDistribution::Gaussian, 1).unwrap();
        assert_eq!(y, x.entries);
    }

    #[test]
    fn rademacher_support() {
        let y = sample_latent::<f64>(200, 7, DesignDistribution::Rademacher, 4);
        assert!(y.iter().all(|&v| v == 1.0 || v == -1.0));
    }

    #[test]
    fn uniform_range() {
        let y = sample_latent::<f64>(500, 4, DesignDistribution::Uniform, 4);
        let h = 3f64.sqrt();
        assert!(y.iter().all(|&v| (-h..=h).contains(&v)));
    }

    #[test]
    fn column_means_at_clt_scale() {
        let n = 1_000_000;
        for dist in [DesignDistribution::Gaussian, DesignDistribution::Rademacher, DesignDistribution::Uniform] {
            let y = sample_latent::<f64>(n, 2, dist, 77);
            for col in y.columns() {
                let mean = col.sum() / n as f64;
                assert!(mean.abs() <= 5.0 / (n as f64).sqrt(), "{dist:?} mean {mean}");
                let var = col.iter().map(|v| v * v).sum::<f64>() / n as f64;
                assert!((var - 1.0).abs() < 0.01, "{dist:?} var {var}");
            }
        }
    }

    #[test]
    fn empirical_covariance_small_cases() {
        let x = DataMatrix { entries: array![[1.0, 0.0], [0.0, 1.0]], seed: 0 };
        let c = empirical_covariance(&x).unwrap();
        assert_eq!(c.view(), array![[0.5, 0.0], [0.0, 0.5]].view());
        let x = DataMatrix { entries: array![[2.0, -1.0, 3.0]], seed: 0 };
        let c = empirical_covariance(&x).unwrap();
        assert_eq!(c.get(0, 2), 6.0);
        assert_eq!(c.get(1, 1), 1.0);
    }

    #[test]
    fn concentration_on_block_model() {
        let params = ModelParams { p: 4, s: 2, k: 1, spikes: vec![3.0], bulk_level: 1.0, profile: CoherenceProfile::Flat };
        let model = build_spiked_sparse_model(&params, 0).unwrap();
        let x = sample_data(&model, 100_000, DesignDistribution::Gaussian, 2024).unwrap();
        let c = empirical_covariance(&x).unwrap();
        let dev = c.sub(&model.sigma).unwrap().max_abs();
        assert!(dev <= 0.05, "max deviation {dev}");
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let s = DesignSampler::from_covariance(&SymmetricMatrix::<f64>::identity(3)).unwrap();
        let a = s.sample(10, DesignDistribution::Uniform, 9).unwrap();
        let b = s.sample(10, DesignDistribution::Uniform, 9).unwrap();
        assert_eq!(a.entries, b.entries);
    }
}
