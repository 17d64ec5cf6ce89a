//! Debiased sparse principal component analysis.
//!
//! A sparsistent selector picks a support `J`; the estimator eigendecomposes the
//! principal submatrix of the sample covariance on `J` and zero-pads the leading
//! eigenvectors back to full dimension. Around that estimator the crate provides
//! ground-truth spiked models, subgaussian sampling, error functionals in the
//! `2 -> inf` norm, theoretical rate evaluators and a seeded Monte Carlo engine.
//!
//! The numerical core is generic over [`Scalar`] (`f32` or `f64`); the `*F64`
//! aliases below are what the experiment engine uses.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod experiments;
pub mod linalg;
pub mod metrics;
pub mod model;
pub mod pipeline;
pub mod sampling;
pub mod selectors;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type SymmetricMatrixF64 = linalg::SymmetricMatrix<f64>;
pub type SymmetricMatrixF32 = linalg::SymmetricMatrix<f32>;
pub type OrthonormalFrameF64 = linalg::OrthonormalFrame<f64>;
pub type OrthonormalFrameF32 = linalg::OrthonormalFrame<f32>;
pub type SpectrumF64 = linalg::Spectrum<f64>;
pub type SpectrumF32 = linalg::Spectrum<f32>;
pub type SparseCovarianceModelF64 = model::SparseCovarianceModel<f64>;
pub type SparseCovarianceModelF32 = model::SparseCovarianceModel<f32>;
pub type SubspaceEstimateF64 = pipeline::SubspaceEstimate<f64>;
pub type SubspaceEstimateF32 = pipeline::SubspaceEstimate<f32>;
pub type DataMatrixF64 = sampling::DataMatrix<f64>;
pub type DataMatrixF32 = sampling::DataMatrix<f32>;
