//! Generation of new data samples confined to the manifold on which a
//! data set concentrates.
//!
//! Given `N` observations of an `n`-dimensional random vector, this crate
//!
//! 1. rescales each feature to `[0, 1]` ([`data::scale`], optional),
//! 2. normalizes the data by PCA to zero mean and identity covariance
//!    ([`pca`]),
//! 3. fits a Gaussian kernel-density model with a modified Silverman
//!    bandwidth whose second moment is exactly the identity ([`kde`]),
//! 4. builds a diffusion-maps basis from the transition matrix of a kernel
//!    random walk on the data points ([`diffmaps`]),
//! 5. picks the basis size `m` by a covariance reconstruction criterion
//!    ([`reduction`]),
//! 6. integrates a damped second-order stochastic dynamics whose invariant
//!    measure is the KDE, projected on the reduced basis so that sample
//!    paths stay near the data manifold ([`isde`]),
//! 7. maps retained states back to the original coordinates ([`sampler`]).
//!
//! The full pipeline is wrapped by [`sampler::generate`]; every stage is
//! also usable on its own. All randomness flows through splittable,
//! counter-style streams ([`noise`]) so runs are reproducible bit for bit
//! from a single seed.
//!
//! The crate is `no_std`-compatible (with `alloc`); the `std` feature (on
//! by default) enables faster matrix products, and `parallel` enables
//! column-parallel force evaluation.

#![cfg_attr(not(feature = "std"), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod data;
pub mod diffmaps;
pub mod error;
pub mod isde;
pub mod kde;
pub mod noise;
pub mod pca;
pub mod reduction;
pub mod sampler;
pub mod synth;

pub use data::{scale, unscale, DataMatrix, ScalingMap};
pub use diffmaps::{build_basis, spectrum, DiffusionBasis, DiffusionSpectrum};
pub use error::{Error, Result};
pub use isde::{derive_step, min_m0, Basis, IsdeRunConfig, IsdeState};
pub use kde::KdeModel;
pub use pca::{fit_pca, normalize, NormalizedData, PcaModel};
pub use reduction::{e_red, select_m, ReductionDiagnostics};
pub use sampler::{
    concentration_stats, generate, marginal_pdf, ConcentrationStats, ManifoldDescriptor,
    PipelineOptions, PipelineReport,
};
