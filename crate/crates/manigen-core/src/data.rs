//! Sample matrices and per-feature min–max scaling.
//!
//! Data is stored column-per-sample: an `n × N` matrix holds `N` samples of
//! an `n`-dimensional vector. Scaling maps each feature (row) to
//! `[eps_s, 1 + eps_s]`; the small positive offset keeps every scaled value
//! away from exactly zero.

use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// An `n × N` matrix of `N` samples of an `n`-dimensional random vector,
/// one sample per column. Entries are finite; `n ≥ 1`.
///
/// [`DataMatrix::new`] additionally requires `N ≥ 2` (empirical moments need
/// at least two samples); [`DataMatrix::from_samples`] accepts any `N ≥ 0`
/// and exists for pipeline *outputs*, which may legitimately be empty.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    values: DMatrix<f64>,
}

fn check_finite(values: &DMatrix<f64>, what: &'static str) -> Result<()> {
    for col in 0..values.ncols() {
        for row in 0..values.nrows() {
            if !values[(row, col)].is_finite() {
                return Err(Error::NonFinite { what, row, col });
            }
        }
    }
    Ok(())
}

impl DataMatrix {
    /// Wrap an `n × N` matrix of input data. Requires `n ≥ 1`, `N ≥ 2`,
    /// all entries finite.
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        if values.ncols() < 2 {
            return Err(Error::TooFewSamples(values.ncols()));
        }
        Self::from_samples(values)
    }

    /// Wrap generated output samples: `n ≥ 1`, any `N ≥ 0`, finite entries.
    pub fn from_samples(values: DMatrix<f64>) -> Result<Self> {
        if values.nrows() == 0 {
            return Err(Error::InvalidArgument {
                name: "values",
                reason: "matrix has zero rows".into(),
            });
        }
        check_finite(&values, "data matrix")?;
        Ok(Self { values })
    }

    /// Number of features `n` (rows).
    pub fn n_features(&self) -> usize {
        self.values.nrows()
    }

    /// Number of samples `N` (columns).
    pub fn n_samples(&self) -> usize {
        self.values.ncols()
    }

    /// The underlying matrix, one sample per column.
    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    /// Consume and return the underlying matrix.
    pub fn into_inner(self) -> DMatrix<f64> {
        self.values
    }

    /// Per-feature empirical mean.
    pub fn mean(&self) -> DVector<f64> {
        let n = self.n_samples() as f64;
        &self.values * DVector::from_element(self.n_samples(), 1.0 / n)
    }

    /// Unbiased empirical covariance `(1/(N−1)) Σ (x−m)(x−m)ᵀ`.
    pub fn covariance(&self) -> DMatrix<f64> {
        covariance_of(&self.values)
    }
}

/// Unbiased covariance of the columns of an arbitrary matrix (`N ≥ 2`).
pub(crate) fn covariance_of(values: &DMatrix<f64>) -> DMatrix<f64> {
    let n_samples = values.ncols();
    assert!(n_samples >= 2, "covariance needs at least 2 columns");
    let mean = values * DVector::from_element(n_samples, 1.0 / n_samples as f64);
    let mut centered = values.clone();
    for mut col in centered.column_iter_mut() {
        col -= &mean;
    }
    let scale = 1.0 / (n_samples as f64 - 1.0);
    let mut cov = &centered * centered.transpose();
    cov *= scale;
    // Symmetrize: the product is symmetric up to rounding.
    let cov_t = cov.transpose();
    (cov + cov_t) * 0.5
}

/// Per-feature affine map taking raw values to `[eps_s, 1 + eps_s]` and back.
///
/// A feature whose min equals its max carries no information; it is mapped
/// to the constant `eps_s` and the inverse map restores the constant.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingMap {
    min: DVector<f64>,
    max: DVector<f64>,
    eps_s: f64,
}

impl ScalingMap {
    /// Rebuild a map from stored bounds (for deserialization).
    /// Requires `eps_s > 0`, finite bounds, `max ≥ min` per feature.
    pub fn from_parts(min: Vec<f64>, max: Vec<f64>, eps_s: f64) -> Result<Self> {
        if !(eps_s > 0.0) || !eps_s.is_finite() {
            return Err(Error::InvalidArgument {
                name: "eps_s",
                reason: "must be a finite positive real".into(),
            });
        }
        if min.len() != max.len() {
            return Err(Error::DimensionMismatch {
                what: "scaling bounds",
                expected: min.len(),
                actual: max.len(),
            });
        }
        for (i, (&lo, &hi)) in min.iter().zip(&max).enumerate() {
            if !lo.is_finite() || !hi.is_finite() || hi < lo {
                return Err(Error::InvalidArgument {
                    name: "min/max",
                    reason: alloc::format!("feature {i} has invalid bounds [{lo}, {hi}]"),
                });
            }
        }
        Ok(Self {
            min: DVector::from_vec(min),
            max: DVector::from_vec(max),
            eps_s,
        })
    }

    /// Per-feature minima of the data the map was fitted on.
    pub fn min(&self) -> &DVector<f64> {
        &self.min
    }

    /// Per-feature maxima of the data the map was fitted on.
    pub fn max(&self) -> &DVector<f64> {
        &self.max
    }

    /// The positive offset added to every scaled value.
    pub fn eps_s(&self) -> f64 {
        self.eps_s
    }

    /// Number of features the map applies to.
    pub fn n_features(&self) -> usize {
        self.min.len()
    }
}

/// Scale each feature to `[eps_s, 1 + eps_s]`:
/// `x ↦ (x − min)/(max − min) + eps_s`, computed per row.
///
/// Constant features map to the constant `eps_s`.
pub fn scale(raw: &DataMatrix, eps_s: f64) -> Result<(DataMatrix, ScalingMap)> {
    if !(eps_s > 0.0) || !eps_s.is_finite() {
        return Err(Error::InvalidArgument {
            name: "eps_s",
            reason: "must be a finite positive real".into(),
        });
    }
    let values = raw.values();
    let n = raw.n_features();
    let mut min = DVector::from_element(n, f64::INFINITY);
    let mut max = DVector::from_element(n, f64::NEG_INFINITY);
    for col in values.column_iter() {
        for (i, &v) in col.iter().enumerate() {
            min[i] = min[i].min(v);
            max[i] = max[i].max(v);
        }
    }
    let map = ScalingMap {
        min,
        max,
        eps_s,
    };
    let scaled = apply_scaling(values, &map);
    Ok((DataMatrix { values: scaled }, map))
}

fn apply_scaling(values: &DMatrix<f64>, map: &ScalingMap) -> DMatrix<f64> {
    let mut out = values.clone();
    for i in 0..out.nrows() {
        let span = map.max[i] - map.min[i];
        if span > 0.0 {
            let inv = 1.0 / span;
            for j in 0..out.ncols() {
                out[(i, j)] = (out[(i, j)] - map.min[i]) * inv + map.eps_s;
            }
        } else {
            for j in 0..out.ncols() {
                out[(i, j)] = map.eps_s;
            }
        }
    }
    out
}

/// Invert [`scale`]: `x = min + (max − min)(x_scaled − eps_s)`.
/// Constant features are restored to their stored constant (`min`).
pub fn unscale(scaled: &DataMatrix, map: &ScalingMap) -> Result<DataMatrix> {
    if scaled.n_features() != map.n_features() {
        return Err(Error::DimensionMismatch {
            what: "unscale features",
            expected: map.n_features(),
            actual: scaled.n_features(),
        });
    }
    let mut out = scaled.values().clone();
    for i in 0..out.nrows() {
        let span = map.max[i] - map.min[i];
        for j in 0..out.ncols() {
            out[(i, j)] = if span > 0.0 {
                map.min[i] + span * (out[(i, j)] - map.eps_s)
            } else {
                map.min[i]
            };
        }
    }
    DataMatrix::from_samples(out)
}
