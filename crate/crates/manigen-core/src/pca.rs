//! PCA-based normalization.
//!
//! `fit_pca` computes the empirical mean and covariance of the data and
//! keeps the eigenpairs above a relative rank cutoff. `normalize` maps the
//! data through `η = μ^{−1/2} φᵀ (x − mean)`, producing coordinates with
//! zero empirical mean and identity empirical covariance; `denormalize`
//! inverts the map, `x = mean + φ μ^{1/2} η`.
//!
//! PCA here is strictly a normalization: rank truncation removes directions
//! with (numerically) zero variance. Discovering the manifold the data
//! concentrates on is the job of [`crate::diffmaps`].

use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};
#[allow(unused_imports)]
use num_traits::Float;

use crate::data::{covariance_of, DataMatrix};
use crate::error::{Error, Result};

/// Affine normalization map fitted by [`fit_pca`]: eigenpairs of the data
/// covariance above the rank cutoff, in descending eigenvalue order.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    mean: DVector<f64>,
    /// Retained eigenvalues, descending, all positive.
    eigvals: DVector<f64>,
    /// `n × ν`; orthonormal columns, sign fixed so each column's
    /// largest-magnitude component is positive.
    eigvecs: DMatrix<f64>,
    rank_tol: f64,
}

/// Data in normalized coordinates: a `ν × N` matrix whose columns have zero
/// empirical mean and identity empirical covariance when produced by
/// [`normalize`] on the data the model was fitted to.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedData {
    eta: DMatrix<f64>,
}

impl NormalizedData {
    /// Wrap an existing `ν × N` coordinate matrix (`ν ≥ 1`, `N ≥ 2`,
    /// finite entries). The moment identities are the caller's business;
    /// check them with [`NormalizedData::moment_errors`] if needed.
    pub fn from_matrix(eta: DMatrix<f64>) -> Result<Self> {
        if eta.nrows() == 0 {
            return Err(Error::InvalidArgument {
                name: "eta",
                reason: "zero rows".into(),
            });
        }
        if eta.ncols() < 2 {
            return Err(Error::TooFewSamples(eta.ncols()));
        }
        for j in 0..eta.ncols() {
            for i in 0..eta.nrows() {
                if !eta[(i, j)].is_finite() {
                    return Err(Error::NonFinite {
                        what: "normalized data",
                        row: i,
                        col: j,
                    });
                }
            }
        }
        Ok(Self { eta })
    }

    /// The `ν × N` coordinate matrix.
    pub fn eta(&self) -> &DMatrix<f64> {
        &self.eta
    }

    /// Normalized dimension ν.
    pub fn nu(&self) -> usize {
        self.eta.nrows()
    }

    /// Sample count N.
    pub fn n_samples(&self) -> usize {
        self.eta.ncols()
    }

    /// `(‖mean‖∞, ‖cov − I‖F)` of the stored coordinates — both ≈ 0 for
    /// data normalized by its own model.
    pub fn moment_errors(&self) -> (f64, f64) {
        let mean = &self.eta * DVector::from_element(self.n_samples(), 1.0 / self.n_samples() as f64);
        let cov = covariance_of(&self.eta);
        let mean_err = mean.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut cov_err = 0.0f64;
        for i in 0..cov.nrows() {
            for j in 0..cov.ncols() {
                let target = if i == j { 1.0 } else { 0.0 };
                cov_err += (cov[(i, j)] - target).powi(2);
            }
        }
        (mean_err, cov_err.sqrt())
    }
}

impl PcaModel {
    /// Rebuild a model from stored fields (for deserialization).
    /// Validates orthonormality of the eigenvector columns.
    pub fn from_parts(
        mean: Vec<f64>,
        eigvals: Vec<f64>,
        eigvecs: DMatrix<f64>,
        rank_tol: f64,
    ) -> Result<Self> {
        let n = mean.len();
        let nu = eigvals.len();
        if eigvecs.nrows() != n || eigvecs.ncols() != nu {
            return Err(Error::DimensionMismatch {
                what: "eigvecs shape",
                expected: n * nu,
                actual: eigvecs.nrows() * eigvecs.ncols(),
            });
        }
        if nu == 0 || nu > n {
            return Err(Error::RankDeficient);
        }
        if eigvals.iter().any(|&v| !(v > 0.0)) {
            return Err(Error::InvalidArgument {
                name: "eigvals",
                reason: "must all be positive".into(),
            });
        }
        let gram = eigvecs.transpose() * &eigvecs;
        let mut err = 0.0f64;
        for i in 0..nu {
            for j in 0..nu {
                let target = if i == j { 1.0 } else { 0.0 };
                err = err.max((gram[(i, j)] - target).abs());
            }
        }
        if err > 1e-10 {
            return Err(Error::InvalidArgument {
                name: "eigvecs",
                reason: alloc::format!("columns not orthonormal (deviation {err:.2e})"),
            });
        }
        Ok(Self {
            mean: DVector::from_vec(mean),
            eigvals: DVector::from_vec(eigvals),
            eigvecs,
            rank_tol,
        })
    }

    /// Feature-space mean.
    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    /// Retained covariance eigenvalues, descending.
    pub fn eigvals(&self) -> &DVector<f64> {
        &self.eigvals
    }

    /// Retained eigenvectors, one per column, orthonormal.
    pub fn eigvecs(&self) -> &DMatrix<f64> {
        &self.eigvecs
    }

    /// Relative eigenvalue cutoff used at fit time.
    pub fn rank_tol(&self) -> f64 {
        self.rank_tol
    }

    /// Ambient dimension n.
    pub fn n_features(&self) -> usize {
        self.mean.len()
    }

    /// Retained dimension ν.
    pub fn nu(&self) -> usize {
        self.eigvals.len()
    }
}

/// Fit the normalization model: empirical mean and covariance, symmetric
/// eigendecomposition, and retention of eigenvalues above
/// `rank_tol · max(eigval)`.
///
/// Errors with [`Error::RankDeficient`] when no eigenvalue clears the
/// cutoff (the data is a single repeated point).
pub fn fit_pca(x: &DataMatrix, rank_tol: f64) -> Result<PcaModel> {
    if !(0.0..1.0).contains(&rank_tol) {
        return Err(Error::InvalidArgument {
            name: "rank_tol",
            reason: "must lie in [0, 1)".into(),
        });
    }
    let mean = x.mean();
    let cov = x.covariance();
    let eigen = nalgebra::SymmetricEigen::try_new(cov.clone(), f64::EPSILON, 0)
        .ok_or(Error::EigenFailure { what: "covariance" })?;

    // Descending order, stable in the original index on ties.
    let n = x.n_features();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        eigen.eigenvalues[j]
            .partial_cmp(&eigen.eigenvalues[i])
            .unwrap()
            .then(i.cmp(&j))
    });

    let max_eig = eigen.eigenvalues[order[0]];
    if !(max_eig > 0.0) {
        return Err(Error::RankDeficient);
    }
    let cutoff = rank_tol * max_eig;
    let kept: Vec<usize> = order
        .into_iter()
        .filter(|&i| eigen.eigenvalues[i] > cutoff)
        .collect();
    if kept.is_empty() {
        return Err(Error::RankDeficient);
    }

    let nu = kept.len();
    let mut eigvals = DVector::zeros(nu);
    let mut eigvecs = DMatrix::zeros(n, nu);
    for (k, &i) in kept.iter().enumerate() {
        eigvals[k] = eigen.eigenvalues[i];
        let mut col = eigen.eigenvectors.column(i).clone_owned();
        // Sign convention: largest-magnitude component positive
        // (first such index on exact ties).
        let lead = col
            .iter()
            .enumerate()
            .fold((0usize, 0.0f64), |(bi, bv), (ci, &cv)| {
                if cv.abs() > bv {
                    (ci, cv.abs())
                } else {
                    (bi, bv)
                }
            })
            .0;
        if col[lead] < 0.0 {
            col.neg_mut();
        }
        eigvecs.set_column(k, &col);
    }

    Ok(PcaModel {
        mean,
        eigvals,
        eigvecs,
        rank_tol,
    })
}

/// Apply the normalization `η = μ^{−1/2} φᵀ (x − mean)` column-wise.
pub fn normalize(x: &DataMatrix, pca: &PcaModel) -> Result<NormalizedData> {
    if x.n_features() != pca.n_features() {
        return Err(Error::DimensionMismatch {
            what: "normalize features",
            expected: pca.n_features(),
            actual: x.n_features(),
        });
    }
    let mut centered = x.values().clone();
    for mut col in centered.column_iter_mut() {
        col -= &pca.mean;
    }
    let mut eta = pca.eigvecs.transpose() * centered;
    for k in 0..pca.nu() {
        let inv_sqrt = 1.0 / pca.eigvals[k].sqrt();
        for j in 0..eta.ncols() {
            eta[(k, j)] *= inv_sqrt;
        }
    }
    NormalizedData::from_matrix(eta)
}

/// Invert the normalization: `x = mean + φ μ^{1/2} η`, column-wise.
/// Accepts any number of columns (generated samples included).
pub fn denormalize(eta: &DMatrix<f64>, pca: &PcaModel) -> Result<DataMatrix> {
    if eta.nrows() != pca.nu() {
        return Err(Error::DimensionMismatch {
            what: "denormalize rows",
            expected: pca.nu(),
            actual: eta.nrows(),
        });
    }
    let mut scaled = eta.clone();
    for k in 0..pca.nu() {
        let sqrt = pca.eigvals[k].sqrt();
        for j in 0..scaled.ncols() {
            scaled[(k, j)] *= sqrt;
        }
    }
    let mut x = &pca.eigvecs * scaled;
    for mut col in x.column_iter_mut() {
        col += &pca.mean;
    }
    DataMatrix::from_samples(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth;
    use approx::assert_abs_diff_eq;

    fn dm(rows: usize, cols: usize, v: &[f64]) -> DataMatrix {
        DataMatrix::new(DMatrix::from_row_slice(rows, cols, v)).unwrap()
    }

    #[test]
    fn hand_case_rank_one() {
        // Columns (1,0), (−1,0), (0,0): cov diag(1,0) → ν=1, μ₁=1, φ¹=±e₁.
        let x = dm(2, 3, &[1.0, -1.0, 0.0, 0.0, 0.0, 0.0]);
        let p = fit_pca(&x, 1e-12).unwrap();
        assert_eq!(p.nu(), 1);
        assert_abs_diff_eq!(p.eigvals()[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.eigvecs()[(0, 0)].abs(), 1.0, epsilon = 1e-12);
        // Sign convention: largest-magnitude component positive.
        assert!(p.eigvecs()[(0, 0)] > 0.0);
        assert_abs_diff_eq!(p.mean()[0], 0.0, epsilon = 1e-15);
    }

    #[test]
    fn identity_covariance_keeps_full_rank() {
        // Four columns with exact zero mean and identity covariance.
        let s = (3.0f64 / 2.0).sqrt();
        let x = dm(2, 4, &[s, -s, 0.0, 0.0, 0.0, 0.0, s, -s]);
        let c = x.covariance();
        assert_abs_diff_eq!(c[(0, 0)], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(c[(1, 1)], 1.0, epsilon = 1e-12);
        let p = fit_pca(&x, 1e-12).unwrap();
        assert_eq!(p.nu(), 2);
        assert_abs_diff_eq!(p.eigvals()[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.eigvals()[1], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn repeated_point_is_rank_deficient() {
        let x = dm(2, 3, &[2.0, 2.0, 2.0, -1.0, -1.0, -1.0]);
        assert!(matches!(fit_pca(&x, 1e-12), Err(Error::RankDeficient)));
    }

    #[test]
    fn normalized_moments_and_round_trip() {
        let x = synth::circles(230, (1.0, 2.0), 0.05, 11).unwrap();
        let p = fit_pca(&x, 1e-12).unwrap();
        assert_eq!(p.nu(), 2);
        let eta = normalize(&x, &p).unwrap();
        let (mean_err, cov_err) = eta.moment_errors();
        assert!(mean_err <= 1e-10, "mean error {mean_err}");
        assert!(cov_err <= 1e-8, "cov error {cov_err}");

        // Full-rank reconstruction.
        let back = denormalize(eta.eta(), &p).unwrap();
        let num = (back.values() - x.values()).norm();
        assert!(num / x.values().norm() <= 1e-10);
    }

    #[test]
    fn eigenpair_residuals() {
        let x = synth::helix(150, 0.1, 5).unwrap();
        let p = fit_pca(&x, 1e-12).unwrap();
        let cov = x.covariance();
        let mu_max = p.eigvals()[0];
        for k in 0..p.nu() {
            let v = p.eigvecs().column(k);
            let r = (&cov * v) - p.eigvals()[k] * v;
            assert!(r.norm() <= 1e-8 * mu_max, "residual {}", r.norm());
        }
        // Descending order.
        for k in 1..p.nu() {
            assert!(p.eigvals()[k] <= p.eigvals()[k - 1]);
        }
    }

    #[test]
    fn rank_truncated_round_trip_matches_projection() {
        // Nearly-degenerate third coordinate: truncation keeps ν < n and the
        // round trip must equal the explicit projection onto the kept space.
        let x = synth::circles(60, (1.0, 2.0), 0.05, 2).unwrap();
        let mut v = x.values().clone();
        let tiny = v.row(0) * 1e-9;
        v = v.insert_row(2, 0.0);
        v.set_row(2, &tiny);
        let x3 = DataMatrix::new(v).unwrap();
        let p = fit_pca(&x3, 1e-8).unwrap();
        assert_eq!(p.nu(), 2);
        let eta = normalize(&x3, &p).unwrap();
        let back = denormalize(eta.eta(), &p).unwrap();

        // Projection of the centered data onto span(φ), plus the mean.
        let phi = p.eigvecs();
        let mut centered = x3.values().clone();
        for mut col in centered.column_iter_mut() {
            col -= p.mean();
        }
        let mut projected = phi * (phi.transpose() * centered);
        for mut col in projected.column_iter_mut() {
            col += p.mean();
        }
        assert!((back.values() - projected).norm() <= 1e-10 * projected.norm());
    }

    #[test]
    fn zero_eta_denormalizes_to_mean() {
        let x = synth::circles(30, (1.0, 2.0), 0.1, 8).unwrap();
        let p = fit_pca(&x, 1e-12).unwrap();
        let zeros = DMatrix::zeros(p.nu(), 5);
        let out = denormalize(&zeros, &p).unwrap();
        for j in 0..5 {
            for i in 0..2 {
                assert_abs_diff_eq!(out.values()[(i, j)], p.mean()[i], epsilon = 1e-15);
            }
        }
    }
}
