//! Gaussian kernel-density model with the modified Silverman bandwidth.
//!
//! For normalized data `η^{d,1..N}` in dimension ν, the density is the
//! equal-weight Gaussian mixture
//!
//! ```text
//! p(η) = (1/N) Σ_j  𝒩( (ŝ/s)·η^{d,j},  ŝ² I )(η)
//! ```
//!
//! with `s = {4/(N(2+ν))}^{1/(ν+4)}` and `ŝ = s/√(s² + (N−1)/N)`. The
//! shrunken centers and bandwidth are chosen so the mixture's mean is the
//! data mean scaled by `ŝ/s` (zero for normalized data) and its covariance
//! is *exactly* the identity: `ŝ² + (ŝ/s)²(N−1)/N = 1`.
//!
//! Densities are evaluated in log space (log-sum-exp); the normalized
//! gradient `∇ log p`, which drives the sampler, is a softmax-weighted
//! convex combination of `(center − u)/ŝ²` terms — never a literal `∇p/p`,
//! which underflows far from the data.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::{DMatrix, DVector, DVectorView};
#[allow(unused_imports)]
use num_traits::Float;

use crate::data::covariance_of;
use crate::error::{Error, Result};
use crate::pca::NormalizedData;

/// Terms whose squared distance exceeds the per-column minimum by this many
/// `ŝ²` contribute less than `e⁻²⁰ ≈ 2·10⁻⁹` relative weight; the optional
/// cutoff drops them.
const CUTOFF_SQ_DIST: f64 = 40.0;

/// Silverman bandwidth `s` and its modified (shrunken) companion `ŝ` for
/// dimension `nu` and sample count `n_samples`.
pub fn bandwidths(nu: usize, n_samples: usize) -> (f64, f64) {
    let nu = nu as f64;
    let n = n_samples as f64;
    let s = (4.0 / (n * (2.0 + nu))).powf(1.0 / (nu + 4.0));
    let s_hat = s / (s * s + (n - 1.0) / n).sqrt();
    (s, s_hat)
}

/// Fitted kernel-density model: bandwidths plus pre-shrunk centers.
#[derive(Debug, Clone, PartialEq)]
pub struct KdeModel {
    nu: usize,
    n_samples: usize,
    s: f64,
    s_hat: f64,
    /// `ν × N`, column j = `(ŝ/s)·η^{d,j}`.
    centers: DMatrix<f64>,
    /// Transposed copy of `centers` kept for fast `centersᵀ·U` products.
    centers_t: DMatrix<f64>,
    /// `‖center_j‖²`, precomputed.
    center_sq: Vec<f64>,
    /// Drop far kernel terms (off by default; a speed knob for large N).
    cutoff: bool,
}

/// Fit the model to normalized data (bandwidths from `(ν, N)`, centers
/// shrunk once at fit time).
pub fn fit(eta: &NormalizedData) -> KdeModel {
    KdeModel::from_points(eta.eta()).expect("normalized data is always a valid center set")
}

impl KdeModel {
    /// Build a model over an arbitrary finite `ν × N` point set, `N ≥ 1`.
    ///
    /// [`fit`] is the normal entry point; this constructor exists for
    /// diagnostics on hand-built point sets (including a single center,
    /// where `ŝ = 1` and the density is one Gaussian).
    pub fn from_points(points: &DMatrix<f64>) -> Result<Self> {
        let (nu, n_samples) = (points.nrows(), points.ncols());
        if nu == 0 {
            return Err(Error::InvalidArgument {
                name: "points",
                reason: "zero rows".into(),
            });
        }
        if n_samples == 0 {
            return Err(Error::InvalidArgument {
                name: "points",
                reason: "no centers".into(),
            });
        }
        for j in 0..n_samples {
            for i in 0..nu {
                if !points[(i, j)].is_finite() {
                    return Err(Error::NonFinite {
                        what: "kernel centers",
                        row: i,
                        col: j,
                    });
                }
            }
        }
        let (s, s_hat) = bandwidths(nu, n_samples);
        let centers = points * (s_hat / s);
        let centers_t = centers.transpose();
        let center_sq = (0..n_samples)
            .map(|j| centers.column(j).norm_squared())
            .collect();
        Ok(Self {
            nu,
            n_samples,
            s,
            s_hat,
            centers,
            centers_t,
            center_sq,
            cutoff: false,
        })
    }

    /// Enable/disable the far-term cutoff (default off). With the cutoff
    /// on, kernel terms farther than `40ŝ²` (squared) beyond the closest
    /// center are skipped; the relative error is below `2·10⁻⁹`.
    pub fn with_distance_cutoff(mut self, enabled: bool) -> Self {
        self.cutoff = enabled;
        self
    }

    /// Dimension ν.
    pub fn nu(&self) -> usize {
        self.nu
    }

    /// Number of kernel centers N.
    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    /// Silverman bandwidth `s`.
    pub fn s(&self) -> f64 {
        self.s
    }

    /// Modified bandwidth `ŝ` (the kernel standard deviation).
    pub fn s_hat(&self) -> f64 {
        self.s_hat
    }

    /// The shrunken centers, one per column.
    pub fn centers(&self) -> &DMatrix<f64> {
        &self.centers
    }

    /// `log p(η)` via log-sum-exp; finite for every finite `η`.
    pub fn log_density(&self, point: DVectorView<'_, f64>) -> f64 {
        assert_eq!(point.nrows(), self.nu, "point dimension");
        let inv_two_var = 1.0 / (2.0 * self.s_hat * self.s_hat);
        let mut sq = vec![0.0f64; self.n_samples];
        let mut min_sq = f64::INFINITY;
        for j in 0..self.n_samples {
            let d2 = (self.centers.column(j) - point).norm_squared();
            sq[j] = d2;
            min_sq = min_sq.min(d2);
        }
        let limit = if self.cutoff {
            min_sq + CUTOFF_SQ_DIST * self.s_hat * self.s_hat
        } else {
            f64::INFINITY
        };
        let mut acc = 0.0f64;
        for &d2 in &sq {
            if d2 <= limit {
                acc += ((min_sq - d2) * inv_two_var).exp();
            }
        }
        let norm = -(self.n_samples as f64).ln()
            - 0.5 * self.nu as f64 * (2.0 * PI * self.s_hat * self.s_hat).ln();
        -min_sq * inv_two_var + acc.ln() + norm
    }

    /// `∇ log p` evaluated per column: result column ℓ is
    /// `Σ_j w_j(uℓ) (center_j − uℓ)/ŝ²` with softmax weights
    /// `w_j ∝ exp(−‖center_j − uℓ‖²/(2ŝ²))`.
    ///
    /// Columns are independent; with the `parallel` feature they are
    /// evaluated in parallel blocks. Panics if `u` has the wrong row count
    /// (callers control shapes); non-finite inputs produce non-finite
    /// outputs caught by the integrator's divergence check.
    pub fn potential_gradient(&self, u: &DMatrix<f64>) -> DMatrix<f64> {
        assert_eq!(u.nrows(), self.nu, "evaluation-point dimension");
        let cols = u.ncols();
        let mut out = DMatrix::zeros(self.nu, cols);
        if cols == 0 {
            return out;
        }
        const BLOCK: usize = 256;

        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            let starts: Vec<usize> = (0..cols).step_by(BLOCK).collect();
            let blocks: Vec<(usize, DMatrix<f64>)> = starts
                .into_par_iter()
                .map(|start| {
                    let len = BLOCK.min(cols - start);
                    (start, self.gradient_block(&u.columns(start, len).clone_owned()))
                })
                .collect();
            for (start, block) in blocks {
                out.columns_mut(start, block.ncols()).copy_from(&block);
            }
        }
        #[cfg(not(feature = "parallel"))]
        {
            let mut start = 0;
            while start < cols {
                let len = BLOCK.min(cols - start);
                let block = self.gradient_block(&u.columns(start, len).clone_owned());
                out.columns_mut(start, len).copy_from(&block);
                start += len;
            }
        }
        out
    }

    /// Gradient of one column block. Distances enter only through softmax
    /// weights, so the per-column constant `‖u‖²` is dropped from the
    /// exponent: `score_j = (2·center_jᵀu − ‖center_j‖²)/(2ŝ²)`.
    fn gradient_block(&self, ub: &DMatrix<f64>) -> DMatrix<f64> {
        let inv_two_var = 1.0 / (2.0 * self.s_hat * self.s_hat);
        let cols = ub.ncols();
        // scores = centersᵀ·U, reused in place for the weights.
        let mut w = &self.centers_t * ub;
        for l in 0..cols {
            let mut col = w.column_mut(l);
            let mut max_score = f64::NEG_INFINITY;
            for j in 0..self.n_samples {
                let score = (2.0 * col[j] - self.center_sq[j]) * inv_two_var;
                col[j] = score;
                max_score = max_score.max(score);
            }
            let limit = if self.cutoff {
                max_score - CUTOFF_SQ_DIST / 2.0
            } else {
                f64::NEG_INFINITY
            };
            let mut total = 0.0f64;
            for j in 0..self.n_samples {
                let v = if col[j] >= limit {
                    (col[j] - max_score).exp()
                } else {
                    0.0
                };
                col[j] = v;
                total += v;
            }
            col /= total;
        }
        // Σ_j w_j (c_j − u)/ŝ²  =  (C·w − u)/ŝ²   (weights sum to 1).
        let mut grad = &self.centers * w;
        grad -= ub;
        grad /= self.s_hat * self.s_hat;
        grad
    }

    /// Closed-form mean and covariance of the mixture, computed from the
    /// stored centers: mean = average center; covariance
    /// `ŝ²I + ((N−1)/N)·Cov(centers)`. For a model fitted on normalized
    /// data these are `0` and `I` up to rounding — the property the
    /// modified bandwidth exists to enforce.
    pub fn analytic_moments(&self) -> (DVector<f64>, DMatrix<f64>) {
        let n = self.n_samples as f64;
        let mean = &self.centers * DVector::from_element(self.n_samples, 1.0 / n);
        let mut second = DMatrix::identity(self.nu, self.nu) * (self.s_hat * self.s_hat);
        if self.n_samples >= 2 {
            second += covariance_of(&self.centers) * ((n - 1.0) / n);
        }
        (mean, second)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::{normal_matrix, stream, Domain};
    use crate::pca::NormalizedData;
    use crate::synth;
    use crate::{fit_pca, normalize};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::Rng;

    fn random_eta(nu: usize, n: usize, seed: u64) -> NormalizedData {
        let mut rng = stream(seed, Domain::Synthesis, 99);
        NormalizedData::from_matrix(normal_matrix(&mut rng, nu, n, 1.0)).unwrap()
    }

    #[test]
    fn bandwidth_reference_values() {
        // ν=2, N=230 and ν=3, N=400 — hand-evaluated.
        let (s, s_hat) = bandwidths(2, 230);
        assert_abs_diff_eq!(s, 0.4040329, epsilon = 1e-6);
        assert_abs_diff_eq!(s_hat, 0.3753128, epsilon = 1e-6);
        let (_, s_hat2) = bandwidths(3, 400);
        assert_abs_diff_eq!(s_hat2, 0.3809980, epsilon = 1e-6);
        // Single-center degenerate case: ŝ = 1 exactly.
        let (_, s_hat1) = bandwidths(4, 1);
        assert_abs_diff_eq!(s_hat1, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn bandwidth_decreases_in_n() {
        let mut prev = f64::INFINITY;
        for n in [2usize, 8, 64, 512, 4096, 1 << 20] {
            let (s, _) = bandwidths(3, n);
            assert!(s < prev);
            prev = s;
        }
    }

    proptest! {
        #[test]
        fn bandwidth_identity_exact(nu in 1usize..64, n in 2usize..100_000) {
            // ŝ² + (ŝ/s)²(N−1)/N = 1, the design identity of the modified
            // bandwidth; algebraically exact, assert to 1e-14.
            let (s, s_hat) = bandwidths(nu, n);
            prop_assert!(0.0 < s_hat && s_hat < s && s < 1.0);
            let lhs = s_hat * s_hat + (s_hat / s).powi(2) * (n as f64 - 1.0) / n as f64;
            prop_assert!((lhs - 1.0).abs() <= 1e-14, "identity off by {}", lhs - 1.0);
        }
    }

    #[test]
    fn single_gaussian_log_density_and_gradient() {
        // One center at the origin: log p(0) = −(ν/2)·log(2πŝ²) and
        // ∇log p(u) = −u/ŝ².
        let pts = DMatrix::from_column_slice(3, 1, &[0.0, 0.0, 0.0]);
        let m = KdeModel::from_points(&pts).unwrap();
        let lp = m.log_density(DVector::zeros(3).as_view());
        let expected = -1.5 * (2.0 * PI * m.s_hat() * m.s_hat()).ln();
        assert_abs_diff_eq!(lp, expected, epsilon = 1e-12);

        let u = DMatrix::from_column_slice(3, 1, &[0.3, -1.2, 2.0]);
        let g = m.potential_gradient(&u);
        let var = m.s_hat() * m.s_hat();
        for i in 0..3 {
            assert_abs_diff_eq!(g[(i, 0)], -u[(i, 0)] / var, epsilon = 1e-12);
        }
    }

    /// Brute-force mixture evaluation, no stabilization: only valid near
    /// the data, used as the oracle where it does not underflow.
    fn naive_log_density(m: &KdeModel, p: &DVector<f64>) -> f64 {
        let var = m.s_hat() * m.s_hat();
        let mut q = 0.0f64;
        for j in 0..m.n_samples() {
            let d2 = (m.centers().column(j) - p).norm_squared();
            q += (-d2 / (2.0 * var)).exp();
        }
        (q / m.n_samples() as f64).ln() - 0.5 * m.nu() as f64 * (2.0 * PI * var).ln()
    }

    /// Direct normalized-gradient summation (softmax written out).
    fn naive_gradient(m: &KdeModel, p: &DVector<f64>) -> DVector<f64> {
        let var = m.s_hat() * m.s_hat();
        let mut wsum = 0.0f64;
        let mut acc = DVector::zeros(m.nu());
        let d2: Vec<f64> = (0..m.n_samples())
            .map(|j| (m.centers().column(j) - p).norm_squared())
            .collect();
        let dmin = d2.iter().cloned().fold(f64::INFINITY, f64::min);
        for j in 0..m.n_samples() {
            let w = (-(d2[j] - dmin) / (2.0 * var)).exp();
            wsum += w;
            acc += (m.centers().column(j) - p) * w;
        }
        acc / (wsum * var)
    }

    #[test]
    fn log_density_matches_brute_force() {
        let eta = random_eta(3, 80, 5);
        let m = fit(&eta);
        let mut rng = stream(6, Domain::Synthesis, 1);
        for _ in 0..50 {
            let p = DVector::from_fn(3, |_, _| rng.random::<f64>() * 4.0 - 2.0);
            let a = m.log_density(p.as_view());
            let b = naive_log_density(&m, &p);
            assert_abs_diff_eq!(a, b, epsilon = 1e-12 * b.abs().max(1.0));
        }
    }

    #[test]
    fn log_density_far_from_data_stays_finite() {
        let eta = random_eta(2, 40, 7);
        let m = fit(&eta);
        for scale in [1e3, 1e6] {
            let p = DVector::from_column_slice(&[scale, -scale]);
            let lp = m.log_density(p.as_view());
            assert!(lp.is_finite(), "log p = {lp} at ‖η‖ ~ {scale}");
            assert!(lp < -1e4);
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        for (nu, n, seed) in [(2usize, 50usize, 1u64), (5, 200, 2)] {
            let eta = random_eta(nu, n, seed);
            let m = fit(&eta);
            let mut rng = stream(seed, Domain::Synthesis, 2);
            let pts = DMatrix::from_fn(nu, 30, |_, _| rng.random::<f64>() * 3.0 - 1.5);
            let g = m.potential_gradient(&pts);
            let h = 1e-6;
            for l in 0..pts.ncols() {
                for i in 0..nu {
                    let mut hi = pts.column(l).clone_owned();
                    let mut lo = hi.clone();
                    hi[i] += h;
                    lo[i] -= h;
                    let fd =
                        (m.log_density(hi.as_view()) - m.log_density(lo.as_view())) / (2.0 * h);
                    assert_abs_diff_eq!(g[(i, l)], fd, epsilon = 1e-5);
                }
            }
        }
    }

    #[test]
    fn gradient_at_a_center_matches_direct_summation() {
        let eta = random_eta(3, 60, 9);
        let m = fit(&eta);
        // Evaluate exactly at shifted center 17: the self-term contributes
        // weight but a zero vector.
        let p = m.centers().column(17).clone_owned();
        let g = m.potential_gradient(&DMatrix::from_column_slice(3, 1, p.as_slice()));
        let oracle = naive_gradient(&m, &p);
        for i in 0..3 {
            assert_abs_diff_eq!(g[(i, 0)], oracle[i], epsilon = 1e-10);
        }
    }

    #[test]
    fn cutoff_changes_little_but_skips_far_terms() {
        let eta = random_eta(2, 120, 13);
        let m = fit(&eta);
        let mc = m.clone().with_distance_cutoff(true);
        let mut rng = stream(13, Domain::Synthesis, 3);
        let pts = DMatrix::from_fn(2, 40, |_, _| rng.random::<f64>() * 6.0 - 3.0);
        let a = m.potential_gradient(&pts);
        let b = mc.potential_gradient(&pts);
        assert!((a - b).amax() < 1e-7);
        for l in 0..pts.ncols() {
            let p = pts.column(l).clone_owned();
            let la = m.log_density(p.as_view());
            let lb = mc.log_density(p.as_view());
            assert_abs_diff_eq!(la, lb, epsilon = 1e-8 * la.abs().max(1.0));
        }
    }

    #[test]
    fn moments_on_normalized_data_are_standard() {
        let x = synth::circles(230, (1.0, 2.0), 0.05, 21).unwrap();
        let p = fit_pca(&x, 1e-12).unwrap();
        let eta = normalize(&x, &p).unwrap();
        let m = fit(&eta);
        let (mean, second) = m.analytic_moments();
        assert!(mean.amax() <= 1e-12);
        let dev = (&second - DMatrix::identity(2, 2)).norm();
        assert!(dev <= 1e-10, "second moment off identity by {dev}");
    }

    #[test]
    fn moments_follow_center_scaling_and_translation() {
        // Points with covariance 2I: covariance = ŝ²I + (ŝ/s)²((N−1)/N)·2I.
        // Shifting every point by t moves the mean by (ŝ/s)·t and leaves
        // the covariance unchanged.
        let n = 500usize;
        let mut rng = stream(3, Domain::Synthesis, 4);
        let mut pts = normal_matrix(&mut rng, 2, n, 2f64.sqrt());
        // Exactly standardize to covariance 2I and mean 0.
        let d = crate::data::DataMatrix::new(pts.clone()).unwrap();
        let pca = fit_pca(&d, 0.0).unwrap();
        let z = normalize(&d, &pca).unwrap();
        pts = z.eta() * 2f64.sqrt();

        let m = KdeModel::from_points(&pts).unwrap();
        let (mean, second) = m.analytic_moments();
        let ratio = m.s_hat() / m.s();
        let expect = m.s_hat() * m.s_hat()
            + ratio * ratio * ((n as f64 - 1.0) / n as f64) * 2.0;
        assert!(mean.amax() <= 1e-12);
        for i in 0..2 {
            for j in 0..2 {
                let target = if i == j { expect } else { 0.0 };
                assert_abs_diff_eq!(second[(i, j)], target, epsilon = 1e-10);
            }
        }

        let t = DVector::from_column_slice(&[3.0, -1.5]);
        let mut shifted = pts.clone();
        for mut col in shifted.column_iter_mut() {
            col += &t;
        }
        let ms = KdeModel::from_points(&shifted).unwrap();
        let (mean_s, second_s) = ms.analytic_moments();
        for i in 0..2 {
            assert_abs_diff_eq!(mean_s[i] - mean[i], ratio * t[i], epsilon = 1e-12);
        }
        assert!((second_s - second).amax() <= 1e-10);
    }

    #[test]
    fn monte_carlo_moments_agree() {
        // 10⁶ draws from the mixture reproduce the analytic moments within
        // three standard errors.
        let eta = random_eta(2, 50, 31);
        let m = fit(&eta);
        let (mean, second) = m.analytic_moments();
        let draws = 1_000_000usize;
        let mut rng = stream(31, Domain::Synthesis, 5);
        let mut sum = DVector::zeros(2);
        let mut sum_outer = DMatrix::zeros(2, 2);
        for _ in 0..draws {
            let j = rng.random_range(0..m.n_samples());
            let mut v = m.centers().column(j).clone_owned();
            for i in 0..2 {
                let z: f64 = rand_distr::Distribution::sample(
                    &rand_distr::StandardNormal,
                    &mut rng,
                );
                v[i] += m.s_hat() * z;
            }
            sum += &v;
            sum_outer += &v * v.transpose();
        }
        let mc_mean = sum / draws as f64;
        let mc_second_raw = sum_outer / draws as f64;
        // Compare central second moments.
        let mc_cov = &mc_second_raw - &mc_mean * mc_mean.transpose();
        // SE of the mean per component ≈ 1/√draws; of covariance entries
        // ≈ √2/√draws. Allow 3 SE.
        let se_mean = 3.0 / (draws as f64).sqrt();
        let se_cov = 3.0 * 2f64.sqrt() / (draws as f64).sqrt();
        for i in 0..2 {
            assert!((mc_mean[i] - mean[i]).abs() <= se_mean);
            for j in 0..2 {
                assert!((mc_cov[(i, j)] - second[(i, j)]).abs() <= se_cov);
            }
        }
    }
}
