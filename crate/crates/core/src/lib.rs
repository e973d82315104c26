//! Codebookless image models.
//!
//! An image (or a spatial-pyramid region of it) is summarized by a single
//! Gaussian over densely sampled local descriptors. The Gaussian is embedded
//! as an SPD matrix, mapped to a flat vector space with the matrix logarithm,
//! and classified with a jointly learned low-rank projection and linear SVM.
//!
//! The numerical kernels are generic over [`Real`] (`f32` or `f64`); the
//! `*64` aliases below name the `f64` instantiations used by the pipeline.

// Negated float comparisons are used on purpose so that NaN fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod descriptors;
pub mod embedding;
pub mod error;
pub mod gaussian;
pub mod lrsvm;
pub mod pbr;
pub mod scalar;
pub mod spm;
pub mod symlin;

#[cfg(test)]
pub(crate) mod testutil;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Mat64 = symlin::Mat<f64>;
pub type SymMatrix64 = symlin::SymMatrix<f64>;
pub type SpdMatrix64 = symlin::SpdMatrix<f64>;
pub type DescriptorSet64 = descriptors::DescriptorSet<f64>;
pub type GaussianModel64 = gaussian::GaussianModel<f64>;
pub type EmbeddingParams64 = embedding::EmbeddingParams<f64>;
pub type EmbeddedGaussian64 = embedding::EmbeddedGaussian<f64>;
pub type SpmFeature64 = spm::SpmFeature<f64>;
pub type TrainingSet64 = lrsvm::TrainingSet<f64>;
pub type LrsvmModel64 = lrsvm::LrsvmModel<f64>;
