//! End-to-end pipeline and post-run diagnostics.
//!
//! [`generate`] chains the stages — optional min–max scaling, PCA
//! normalization, KDE fit, diffusion-maps basis (fixed size or chosen by
//! the reduction criterion), the reduced-order dynamics, and the inverse
//! maps — returning generated samples in the original coordinates plus a
//! [`PipelineReport`] with every resolved parameter and the moment-level
//! health checks. A flag switches to the full-order dynamics, the baseline
//! whose samples scatter off the manifold; [`concentration_stats`]
//! quantifies that contrast (nearest-neighbor distances, exact
//! distance-to-manifold where an analytic descriptor exists, moment gaps).

use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector, DVectorView};
#[allow(unused_imports)]
use num_traits::Float;

use crate::data::{covariance_of, scale, unscale, DataMatrix, ScalingMap};
use crate::diffmaps::{DiffusionBasis, DiffusionSpectrum};
use crate::error::{Error, Result};
use crate::isde::{derive_step, min_m0, run, Basis, IsdeRunConfig};
use crate::kde::{fit as fit_kde, KdeModel};
use crate::pca::{denormalize, fit_pca, normalize, PcaModel};
use crate::reduction::{select_m_with, ReductionDiagnostics};
use crate::synth;

/// How to pick the basis size.
#[derive(Debug, Clone, PartialEq)]
pub enum BasisSize {
    /// Use exactly this m.
    Fixed(usize),
    /// Sweep the reduction criterion and take the smallest crossing;
    /// `m_max = None` sweeps all the way to N.
    Select { tol: f64, m_max: Option<usize> },
}

/// Full pipeline configuration. `epsilon` has no defensible default — it
/// shapes the kernel random walk — so construction starts from it; every
/// other field has the documented default.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOptions {
    /// `Some(ε_s)`: min–max scale features first (required for data whose
    /// features live on different ranges); `None`: use raw features.
    pub eps_s: Option<f64>,
    /// Relative eigenvalue cutoff of the normalization.
    pub rank_tol: f64,
    /// Diffusion-kernel smoothing parameter.
    pub epsilon: f64,
    /// Eigenvalue scaling exponent of the basis (observationally inert;
    /// kept because the basis definition has it).
    pub kappa: u32,
    /// Basis size policy.
    pub basis_size: BasisSize,
    /// Run the full-order dynamics instead (baseline; ignores the basis).
    pub full_order: bool,
    /// Damping coefficient.
    pub f0: f64,
    /// Oversampling factor for the derived step.
    pub fac: f64,
    /// Explicit step override; `None` derives `2π·ŝ/fac`.
    pub delta_r: Option<f64>,
    /// Steps between retained samples; `None` uses the decay bound, and a
    /// user value below the bound is raised to it (noted in the report).
    pub m0: Option<usize>,
    /// Retained matrices (each contributes N samples).
    pub n_mc: usize,
    /// Master seed.
    pub seed: u64,
}

impl PipelineOptions {
    /// Defaults around a caller-chosen kernel smoothing ε.
    pub fn new(epsilon: f64) -> Self {
        Self {
            eps_s: None,
            rank_tol: 1e-12,
            epsilon,
            kappa: 1,
            basis_size: BasisSize::Select {
                tol: 1e-3,
                m_max: None,
            },
            full_order: false,
            f0: 1.5,
            fac: 20.0,
            delta_r: None,
            m0: None,
            n_mc: 1,
            seed: 0,
        }
    }
}

/// Everything a run resolved and measured, for the record.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineReport {
    pub n_features: usize,
    pub n_given: usize,
    /// Normalized dimension retained by the PCA stage.
    pub nu: usize,
    pub scaled: bool,
    pub s: f64,
    pub s_hat: f64,
    pub epsilon: f64,
    pub kappa: u32,
    /// Basis size used (`None` for a full-order run).
    pub m_used: Option<usize>,
    /// Reduction sweep, when one ran.
    pub reduction: Option<ReductionDiagnostics>,
    pub f0: f64,
    pub fac: f64,
    pub delta_r: f64,
    pub m0_bound: usize,
    pub m0_used: usize,
    /// The caller's m0 was below the decay bound and was raised.
    pub m0_raised: bool,
    pub n_mc: usize,
    pub seed: u64,
    pub total_generated: usize,
    /// Pooled generated samples in normalized coordinates:
    /// `(‖mean‖∞, ‖cov − I‖F)`; `None` when nothing was generated.
    pub eta_moment_errors: Option<(f64, f64)>,
    /// Generated-vs-given moments in the original coordinates:
    /// `(‖Δmean‖∞, ‖Δcov‖F/‖cov‖F)`; `None` when nothing was generated.
    pub x_moment_errors: Option<(f64, f64)>,
}

/// Run the whole pipeline on a data set. Returns the generated samples
/// (possibly zero columns when `n_mc = 0`) and the report. Errors carry
/// the stage they happened in.
pub fn generate(x: &DataMatrix, options: &PipelineOptions) -> Result<(DataMatrix, PipelineReport)> {
    let (working, scaling): (DataMatrix, Option<ScalingMap>) = match options.eps_s {
        Some(eps_s) => {
            let (scaled, map) = scale(x, eps_s).map_err(|e| e.in_stage("scale"))?;
            (scaled, Some(map))
        }
        None => (x.clone(), None),
    };

    let pca = fit_pca(&working, options.rank_tol).map_err(|e| e.in_stage("normalize"))?;
    let eta = normalize(&working, &pca).map_err(|e| e.in_stage("normalize"))?;
    let model = fit_kde(&eta);

    let mut reduction = None;
    let mut basis_store: Option<DiffusionBasis> = None;
    let mut m_used = None;
    if !options.full_order {
        let spectrum = DiffusionSpectrum::compute(&eta, options.epsilon)
            .map_err(|e| e.in_stage("basis"))?;
        let m = match &options.basis_size {
            BasisSize::Fixed(m) => *m,
            BasisSize::Select { tol, m_max } => {
                let m_max = m_max.unwrap_or(eta.n_samples()).min(eta.n_samples());
                let diag = select_m_with(&spectrum, x, &pca, &eta, *tol, m_max)
                    .map_err(|e| e.in_stage("reduction"))?;
                let m = diag.m_selected.ok_or_else(|| {
                    Error::InvalidArgument {
                        name: "tol",
                        reason: alloc::format!(
                            "no basis size up to {m_max} reaches the reduction tolerance {tol:e}; \
                             raise tol or m_max"
                        ),
                    }
                    .in_stage("reduction")
                })?;
                reduction = Some(diag);
                m
            }
        };
        let basis = spectrum
            .basis(m, options.kappa)
            .map_err(|e| e.in_stage("basis"))?;
        m_used = Some(m);
        basis_store = Some(basis);
    }

    let delta_r = options
        .delta_r
        .unwrap_or_else(|| derive_step(model.s_hat(), options.fac));
    // Express the decay bound in steps of the step actually used.
    let fac_effective = 2.0 * core::f64::consts::PI * model.s_hat() / delta_r;
    let m0_bound = min_m0(options.f0, fac_effective.max(1.0 + 1e-9), model.s_hat());
    let (m0_used, m0_raised) = match options.m0 {
        None => (m0_bound, false),
        Some(user) if user >= m0_bound => (user, false),
        Some(_) => (m0_bound, true),
    };

    let config = IsdeRunConfig {
        f0: options.f0,
        fac: options.fac,
        delta_r,
        m0: m0_used,
        n_mc: options.n_mc,
        seed: options.seed,
    };
    let basis_choice = match &basis_store {
        Some(b) => Basis::Reduced(b),
        None => Basis::Full,
    };
    let retained = run(&eta, &model, &basis_choice, &config).map_err(|e| e.in_stage("integrate"))?;

    // Pool the retained matrices column-wise: ν × (n_mc·N).
    let n = eta.n_samples();
    let pooled_cols = retained.len() * n;
    let mut pooled = DMatrix::zeros(eta.nu(), pooled_cols);
    for (k, mat) in retained.iter().enumerate() {
        pooled.columns_mut(k * n, n).copy_from(mat);
    }

    let eta_moment_errors = if pooled_cols >= 2 {
        Some(moment_errors_vs_standard(&pooled))
    } else {
        None
    };

    let in_working = denormalize(&pooled, &pca).map_err(|e| e.in_stage("denormalize"))?;
    let generated = match &scaling {
        Some(map) => unscale(&in_working, map).map_err(|e| e.in_stage("denormalize"))?,
        None => in_working,
    };

    let x_moment_errors = if pooled_cols >= 2 {
        let mean_given = x.mean();
        let cov_given = x.covariance();
        let mean_gen = generated.mean();
        let cov_gen = generated.covariance();
        let mean_gap = (mean_gen - mean_given).amax();
        let cov_gap = (cov_gen - &cov_given).norm() / cov_given.norm();
        Some((mean_gap, cov_gap))
    } else {
        None
    };

    let report = PipelineReport {
        n_features: x.n_features(),
        n_given: x.n_samples(),
        nu: eta.nu(),
        scaled: scaling.is_some(),
        s: model.s(),
        s_hat: model.s_hat(),
        epsilon: options.epsilon,
        kappa: options.kappa,
        m_used,
        reduction,
        f0: options.f0,
        fac: options.fac,
        delta_r,
        m0_bound,
        m0_used,
        m0_raised,
        n_mc: options.n_mc,
        seed: options.seed,
        total_generated: pooled_cols,
        eta_moment_errors,
        x_moment_errors,
    };
    Ok((generated, report))
}

/// `(‖mean‖∞, ‖cov − I‖F)` of a pooled coordinate matrix.
fn moment_errors_vs_standard(pooled: &DMatrix<f64>) -> (f64, f64) {
    let n = pooled.ncols() as f64;
    let mean = pooled * DVector::from_element(pooled.ncols(), 1.0 / n);
    let cov = covariance_of(pooled);
    let mut dev = 0.0f64;
    for i in 0..cov.nrows() {
        for j in 0..cov.ncols() {
            let target = if i == j { 1.0 } else { 0.0 };
            dev += (cov[(i, j)] - target).powi(2);
        }
    }
    (mean.amax(), dev.sqrt())
}

/// Analytic description of a manifold the samples should concentrate on,
/// with an exact distance function. Mirrors the built-in generators in
/// [`crate::synth`].
#[derive(Debug, Clone, PartialEq)]
pub enum ManifoldDescriptor {
    /// Two concentric circles in the plane.
    Circles { center: [f64; 2], radii: (f64, f64) },
    /// The curve `(cos t, sin t, pitch·t)`, `t ∈ [span.0, span.1]`.
    Helix { pitch: f64, span: (f64, f64) },
}

impl ManifoldDescriptor {
    /// Origin-centered circle pair, as produced by [`synth::circles`].
    pub fn circles(radii: (f64, f64)) -> Self {
        ManifoldDescriptor::Circles {
            center: [0.0, 0.0],
            radii,
        }
    }

    /// The helix produced by [`synth::helix`].
    pub fn helix() -> Self {
        ManifoldDescriptor::Helix {
            pitch: synth::HELIX_PITCH,
            span: (0.0, synth::HELIX_SPAN),
        }
    }

    /// Ambient dimension of points the descriptor measures.
    pub fn dimension(&self) -> usize {
        match self {
            ManifoldDescriptor::Circles { .. } => 2,
            ManifoldDescriptor::Helix { .. } => 3,
        }
    }

    /// Exact Euclidean distance from `point` to the manifold.
    pub fn distance(&self, point: DVectorView<'_, f64>) -> f64 {
        match self {
            ManifoldDescriptor::Circles { center, radii } => {
                let dx = point[0] - center[0];
                let dy = point[1] - center[1];
                let r = (dx * dx + dy * dy).sqrt();
                (r - radii.0).abs().min((r - radii.1).abs())
            }
            ManifoldDescriptor::Helix { pitch, span } => {
                let sq = |t: f64| {
                    let a = point[0] - t.cos();
                    let b = point[1] - t.sin();
                    let c = point[2] - pitch * t;
                    a * a + b * b + c * c
                };
                // Coarse grid, then golden-section refinement around the
                // best bracket: the objective is smooth and the grid pitch
                // resolves its oscillation.
                const GRID: usize = 2048;
                let (lo, hi) = *span;
                let step = (hi - lo) / GRID as f64;
                let mut best_i = 0usize;
                let mut best = f64::INFINITY;
                for i in 0..=GRID {
                    let v = sq(lo + i as f64 * step);
                    if v < best {
                        best = v;
                        best_i = i;
                    }
                }
                let mut a = lo + best_i.saturating_sub(1) as f64 * step;
                let mut b = (lo + (best_i + 1) as f64 * step).min(hi);
                const INV_PHI: f64 = 0.618_033_988_749_894_8;
                let mut c = b - INV_PHI * (b - a);
                let mut d = a + INV_PHI * (b - a);
                for _ in 0..80 {
                    if sq(c) < sq(d) {
                        b = d;
                    } else {
                        a = c;
                    }
                    c = b - INV_PHI * (b - a);
                    d = a + INV_PHI * (b - a);
                }
                sq(0.5 * (a + b)).sqrt()
            }
        }
    }
}

/// Distribution summary of a batch of non-negative distances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quantiles {
    pub min: f64,
    pub p05: f64,
    pub p25: f64,
    pub p50: f64,
    pub p75: f64,
    pub p95: f64,
    pub max: f64,
    pub mean: f64,
}

impl Quantiles {
    fn from_values(mut values: Vec<f64>) -> Self {
        assert!(!values.is_empty());
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let q = |p: f64| -> f64 {
            let rank = p * (values.len() - 1) as f64;
            let lo = rank.floor() as usize;
            let hi = rank.ceil() as usize;
            let w = rank - lo as f64;
            values[lo] * (1.0 - w) + values[hi] * w
        };
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        Quantiles {
            min: values[0],
            p05: q(0.05),
            p25: q(0.25),
            p50: q(0.50),
            p75: q(0.75),
            p95: q(0.95),
            max: *values.last().unwrap(),
            mean,
        }
    }
}

/// How generated samples sit relative to the given data: nearest-neighbor
/// distance quantiles, exact distance-to-manifold quantiles for both sets
/// when a descriptor is supplied, and moment gaps.
#[derive(Debug, Clone, PartialEq)]
pub struct ConcentrationStats {
    /// Distance from each generated point to its nearest given point.
    pub nn: Quantiles,
    /// Distance-to-manifold of the given data (descriptor runs only).
    pub manifold_given: Option<Quantiles>,
    /// Distance-to-manifold of the generated samples.
    pub manifold_generated: Option<Quantiles>,
    /// Per-component `|mean_generated − mean_given|`.
    pub mean_gap: DVector<f64>,
    /// Entrywise max `|cov_generated − cov_given|`.
    pub cov_gap: f64,
}

/// Compare generated samples to the given data. Nearest neighbors are
/// exact (brute force); distances-to-manifold are exact up to the
/// descriptor's 1-D minimization. Requires matching dimension and at least
/// two points on each side.
pub fn concentration_stats(
    given: &DataMatrix,
    generated: &DataMatrix,
    reference: Option<&ManifoldDescriptor>,
) -> Result<ConcentrationStats> {
    if given.n_features() != generated.n_features() {
        return Err(Error::DimensionMismatch {
            what: "feature count",
            expected: given.n_features(),
            actual: generated.n_features(),
        });
    }
    if generated.n_samples() < 2 {
        return Err(Error::TooFewSamples(generated.n_samples()));
    }
    if let Some(d) = reference {
        if d.dimension() != given.n_features() {
            return Err(Error::DimensionMismatch {
                what: "descriptor dimension",
                expected: d.dimension(),
                actual: given.n_features(),
            });
        }
    }

    let nn_values = nearest_neighbor_distances(generated.values(), given.values());
    let nn = Quantiles::from_values(nn_values);

    let (manifold_given, manifold_generated) = match reference {
        Some(desc) => {
            let dg = |m: &DMatrix<f64>| {
                Quantiles::from_values(
                    (0..m.ncols())
                        .map(|j| desc.distance(m.column(j).as_view()))
                        .collect(),
                )
            };
            (Some(dg(given.values())), Some(dg(generated.values())))
        }
        None => (None, None),
    };

    let mean_gap = (generated.mean() - given.mean()).abs();
    let cov_gap = (generated.covariance() - given.covariance()).amax();

    Ok(ConcentrationStats {
        nn,
        manifold_given,
        manifold_generated,
        mean_gap,
        cov_gap,
    })
}

fn nearest_neighbor_distances(from: &DMatrix<f64>, to: &DMatrix<f64>) -> Vec<f64> {
    let one_point = |j: usize| -> f64 {
        let p = from.column(j);
        let mut best = f64::INFINITY;
        for q in to.column_iter() {
            let d2 = (p - q).norm_squared();
            best = best.min(d2);
        }
        best.sqrt()
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..from.ncols()).into_par_iter().map(one_point).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..from.ncols()).map(one_point).collect()
    }
}

/// Evaluation grid for the 1-D marginal density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

/// 1-D Gaussian KDE of one component over a grid, with the one-dimensional
/// Silverman bandwidth `h = σ̂·(4/(3N))^{1/5}` (a bandwidth floor keeps
/// degenerate samples from collapsing `h` to zero). Returns `(x, pdf)`
/// pairs for plotting or curve comparison.
pub fn marginal_pdf(
    samples: &DataMatrix,
    component: usize,
    grid: &GridSpec,
) -> Result<Vec<(f64, f64)>> {
    if component >= samples.n_features() {
        return Err(Error::InvalidArgument {
            name: "component",
            reason: alloc::format!(
                "index {component} out of range for {} features",
                samples.n_features()
            ),
        });
    }
    let n = samples.n_samples();
    if n == 0 {
        return Err(Error::TooFewSamples(0));
    }
    if grid.points < 2 || !(grid.max > grid.min) {
        return Err(Error::InvalidArgument {
            name: "grid",
            reason: "need points ≥ 2 and max > min".into(),
        });
    }
    let row: Vec<f64> = (0..n)
        .map(|j| samples.values()[(component, j)])
        .collect();
    let mean = row.iter().sum::<f64>() / n as f64;
    let sigma = if n >= 2 {
        (row.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0)).sqrt()
    } else {
        0.0
    };
    let sigma = sigma.max(1e-6 * (1.0 + mean.abs()));
    let h = sigma * (4.0 / (3.0 * n as f64)).powf(0.2);

    let norm = 1.0 / (n as f64 * h * (2.0 * core::f64::consts::PI).sqrt());
    let step = (grid.max - grid.min) / (grid.points - 1) as f64;
    let mut out = Vec::with_capacity(grid.points);
    for k in 0..grid.points {
        let x = grid.min + k as f64 * step;
        let mut acc = 0.0f64;
        for &xi in &row {
            let u = (x - xi) / h;
            acc += (-0.5 * u * u).exp();
        }
        out.push((x, norm * acc));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::{normal_matrix, stream, Domain};
    use approx::assert_abs_diff_eq;

    #[test]
    fn pipeline_runs_end_to_end_and_is_deterministic() {
        let x = synth::circles(60, (1.0, 2.0), 0.02, 50).unwrap();
        let mut opts = PipelineOptions::new(1.0);
        opts.basis_size = BasisSize::Fixed(3);
        opts.m0 = Some(20);
        opts.n_mc = 3;
        opts.seed = 5;
        let (gen_a, report_a) = generate(&x, &opts).unwrap();
        let (gen_b, report_b) = generate(&x, &opts).unwrap();
        assert_eq!(gen_a, gen_b);
        assert_eq!(report_a, report_b);
        assert_eq!(gen_a.n_samples(), 3 * 60);
        assert_eq!(report_a.total_generated, 180);
        assert_eq!(report_a.nu, 2);
        assert_eq!(report_a.m_used, Some(3));
        assert!(report_a.m0_raised); // 20 is far below the decay bound
        assert_eq!(report_a.m0_used, report_a.m0_bound);
    }

    #[test]
    fn zero_n_mc_gives_empty_output_with_report() {
        let x = synth::circles(40, (1.0, 2.0), 0.02, 51).unwrap();
        let mut opts = PipelineOptions::new(1.0);
        opts.basis_size = BasisSize::Fixed(3);
        opts.n_mc = 0;
        let (generated, report) = generate(&x, &opts).unwrap();
        assert_eq!(generated.n_samples(), 0);
        assert_eq!(report.total_generated, 0);
        assert!(report.eta_moment_errors.is_none());
        assert!(report.x_moment_errors.is_none());
    }

    #[test]
    fn scaling_stage_round_trips_through_the_pipeline() {
        // Features on wildly different ranges: scale, generate, and the
        // output must come back in the original units near the data.
        let base = synth::circles(50, (1.0, 2.0), 0.02, 52).unwrap();
        let mut v = base.values().clone();
        for j in 0..v.ncols() {
            v[(0, j)] = v[(0, j)] * 1e4 + 3e5;
        }
        let x = DataMatrix::new(v).unwrap();
        let mut opts = PipelineOptions::new(1.0);
        opts.eps_s = Some(1e-9);
        opts.basis_size = BasisSize::Fixed(3);
        opts.m0 = Some(110);
        opts.n_mc = 4;
        let (generated, report) = generate(&x, &opts).unwrap();
        assert!(report.scaled);
        let (dm, dc) = report.x_moment_errors.unwrap();
        // Mean gap is in raw units; feature 0 spans ~1e4·4 so a few
        // hundred is a loose but meaningful bound. Covariance is relative.
        assert!(dm < 2e3, "mean gap {dm}");
        assert!(dc < 0.5, "cov gap {dc}");
        let _ = generated;
    }

    #[test]
    fn full_order_flag_skips_reduction() {
        let x = synth::circles(40, (1.0, 2.0), 0.02, 53).unwrap();
        let mut opts = PipelineOptions::new(1.0);
        opts.full_order = true;
        opts.m0 = Some(30);
        opts.n_mc = 2;
        let (generated, report) = generate(&x, &opts).unwrap();
        assert_eq!(report.m_used, None);
        assert!(report.reduction.is_none());
        assert_eq!(generated.n_samples(), 80);
    }

    #[test]
    fn selection_failure_is_reported_as_reduction_stage() {
        let x = synth::circles(30, (1.0, 2.0), 0.05, 54).unwrap();
        let mut opts = PipelineOptions::new(1.0);
        opts.basis_size = BasisSize::Select {
            tol: 1e-13,
            m_max: Some(4),
        };
        let err = generate(&x, &opts).unwrap_err();
        assert!(matches!(err, Error::Stage { stage: "reduction", .. }), "{err:?}");
    }

    #[test]
    fn circle_distance_is_exact() {
        let d = ManifoldDescriptor::circles((1.0, 2.0));
        let p = DVector::from_column_slice(&[1.5, 0.0]);
        assert_abs_diff_eq!(d.distance(p.as_view()), 0.5, epsilon = 1e-15);
        let q = DVector::from_column_slice(&[0.0, 2.25]);
        assert_abs_diff_eq!(d.distance(q.as_view()), 0.25, epsilon = 1e-15);
    }

    #[test]
    fn helix_distance_oracle() {
        let d = ManifoldDescriptor::helix();
        // A point exactly on the curve.
        let t = 3.7;
        let on = DVector::from_column_slice(&[t.cos(), t.sin(), synth::HELIX_PITCH * t]);
        assert!(d.distance(on.as_view()) <= 1e-9);
        // A point displaced along the curve normal by 0.12.
        let normal = DVector::from_column_slice(&[-t.cos(), -t.sin(), 0.0]);
        let off = &on + normal * 0.12;
        let dist = d.distance(off.as_view());
        // The true distance is slightly below the displacement because the
        // helix curves back toward the point; it cannot exceed it.
        assert!(dist <= 0.12 + 1e-9 && dist > 0.10, "distance {dist}");
        // Zero-noise synthetic data sits on the manifold.
        let x = synth::helix(50, 0.0, 3).unwrap();
        for j in 0..50 {
            assert!(d.distance(x.values().column(j).as_view()) <= 1e-9);
        }
    }

    #[test]
    fn identical_sets_have_zero_nn_distance() {
        let x = synth::circles(30, (1.0, 2.0), 0.05, 55).unwrap();
        let stats = concentration_stats(&x, &x, Some(&ManifoldDescriptor::circles((1.0, 2.0))))
            .unwrap();
        assert_eq!(stats.nn.max, 0.0);
        assert_eq!(stats.nn.p95, 0.0);
        assert!(stats.mean_gap.amax() <= 1e-15);
        assert!(stats.cov_gap <= 1e-15);
        let mg = stats.manifold_given.unwrap();
        let mn = stats.manifold_generated.unwrap();
        assert_eq!(mg, mn);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let a = synth::circles(10, (1.0, 2.0), 0.0, 1).unwrap();
        let b = synth::helix(10, 0.0, 1).unwrap();
        assert!(concentration_stats(&a, &b, None).is_err());
        assert!(concentration_stats(&a, &a, Some(&ManifoldDescriptor::helix())).is_err());
    }

    #[test]
    fn quantiles_of_known_values() {
        let q = Quantiles::from_values(alloc::vec![4.0, 1.0, 3.0, 2.0, 5.0]);
        assert_abs_diff_eq!(q.min, 1.0);
        assert_abs_diff_eq!(q.p50, 3.0);
        assert_abs_diff_eq!(q.max, 5.0);
        assert_abs_diff_eq!(q.p25, 2.0);
        assert_abs_diff_eq!(q.p75, 4.0);
        assert_abs_diff_eq!(q.mean, 3.0);
    }

    #[test]
    fn marginal_of_standard_normal_matches_density() {
        let mut rng = stream(77, Domain::Synthesis, 9);
        let draws = normal_matrix(&mut rng, 1, 100_000, 1.0);
        let samples = DataMatrix::from_samples(draws).unwrap();
        let grid = GridSpec {
            min: -4.0,
            max: 4.0,
            points: 201,
        };
        let curve = marginal_pdf(&samples, 0, &grid).unwrap();
        let mut sup = 0.0f64;
        for (x, p) in curve {
            let target = (-0.5 * x * x).exp() / (2.0 * core::f64::consts::PI).sqrt();
            sup = sup.max((p - target).abs());
        }
        assert!(sup <= 0.02, "sup-norm gap {sup}");
    }

    #[test]
    fn marginal_degenerate_and_empty_grid_cases() {
        // Single repeated value → a single bump centered there.
        let vals = DMatrix::from_row_slice(1, 5, &[2.5; 5]);
        let samples = DataMatrix::from_samples(vals).unwrap();
        let grid = GridSpec {
            min: 2.0,
            max: 3.0,
            points: 101,
        };
        let curve = marginal_pdf(&samples, 0, &grid).unwrap();
        let peak = curve
            .iter()
            .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .unwrap();
        assert_abs_diff_eq!(peak.0, 2.5, epsilon = 0.011);

        // Grid far away from all mass → finite near-zero curve.
        let far = GridSpec {
            min: 100.0,
            max: 101.0,
            points: 11,
        };
        let flat = marginal_pdf(&samples, 0, &far).unwrap();
        assert!(flat.iter().all(|(_, p)| p.is_finite() && *p < 1e-12));

        // Component index out of range.
        assert!(marginal_pdf(&samples, 1, &grid).is_err());
    }
}
