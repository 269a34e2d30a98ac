//! Synthetic data sets concentrated on known manifolds, for calibration
//! and testing: two concentric circles in the plane and a helix in space.
//! Both come with exact distance-to-manifold formulas (see
//! [`crate::sampler::ManifoldDescriptor`]).

use core::f64::consts::TAU;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::data::DataMatrix;
use crate::error::{Error, Result};
use crate::noise::{stream, Domain};

/// Helix pitch: the curve is `(cos t, sin t, HELIX_PITCH · t)`.
pub const HELIX_PITCH: f64 = 0.25;
/// Helix parameter span: `t ∈ [0, HELIX_SPAN]` (two full turns).
pub const HELIX_SPAN: f64 = 2.0 * TAU;

/// Sample `n_samples` points near two concentric circles centered at the
/// origin, half per circle: `(r + σξ)(cos θ, sin θ)` with `θ` uniform on
/// `[0, 2π)` and `ξ` standard normal. Deterministic given `seed`.
///
/// Requires `n_samples ≥ 4` and even (half per circle), positive radii,
/// `noise_sigma ≥ 0`.
pub fn circles(
    n_samples: usize,
    radii: (f64, f64),
    noise_sigma: f64,
    seed: u64,
) -> Result<DataMatrix> {
    if n_samples < 4 || n_samples % 2 != 0 {
        return Err(Error::InvalidArgument {
            name: "n_samples",
            reason: "must be even and at least 4 (half per circle)".into(),
        });
    }
    if !(radii.0 > 0.0 && radii.1 > 0.0) {
        return Err(Error::InvalidArgument {
            name: "radii",
            reason: "both radii must be positive".into(),
        });
    }
    check_sigma(noise_sigma)?;
    let mut rng = stream(seed, Domain::Synthesis, 0);
    let half = n_samples / 2;
    let mut out = DMatrix::zeros(2, n_samples);
    for j in 0..n_samples {
        let r0 = if j < half { radii.0 } else { radii.1 };
        let theta: f64 = rng.random::<f64>() * TAU;
        let xi: f64 = StandardNormal.sample(&mut rng);
        let r = r0 + noise_sigma * xi;
        out[(0, j)] = r * theta.cos();
        out[(1, j)] = r * theta.sin();
    }
    DataMatrix::new(out)
}

/// Sample `n_samples` points near the helix `(cos t, sin t, HELIX_PITCH·t)`
/// with `t` uniform on `[0, HELIX_SPAN]`, plus isotropic Gaussian noise of
/// standard deviation `noise_sigma` on all three coordinates.
/// Deterministic given `seed`.
pub fn helix(n_samples: usize, noise_sigma: f64, seed: u64) -> Result<DataMatrix> {
    if n_samples < 2 {
        return Err(Error::TooFewSamples(n_samples));
    }
    check_sigma(noise_sigma)?;
    let mut rng = stream(seed, Domain::Synthesis, 1);
    let mut out = DMatrix::zeros(3, n_samples);
    for j in 0..n_samples {
        let t: f64 = rng.random::<f64>() * HELIX_SPAN;
        let e: [f64; 3] = [
            StandardNormal.sample(&mut rng),
            StandardNormal.sample(&mut rng),
            StandardNormal.sample(&mut rng),
        ];
        out[(0, j)] = t.cos() + noise_sigma * e[0];
        out[(1, j)] = t.sin() + noise_sigma * e[1];
        out[(2, j)] = HELIX_PITCH * t + noise_sigma * e[2];
    }
    DataMatrix::new(out)
}

fn check_sigma(noise_sigma: f64) -> Result<()> {
    if !(noise_sigma >= 0.0) || !noise_sigma.is_finite() {
        return Err(Error::InvalidArgument {
            name: "noise_sigma",
            reason: "must be finite and non-negative".into(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    #[allow(unused_imports)]
    use num_traits::Float;

    #[test]
    fn circles_zero_noise_lies_on_circles() {
        let d = circles(8, (1.0, 2.0), 0.0, 3).unwrap();
        for j in 0..8 {
            let r = (d.values()[(0, j)].powi(2) + d.values()[(1, j)].powi(2)).sqrt();
            let expected = if j < 4 { 1.0 } else { 2.0 };
            assert!((r - expected).abs() < 1e-12, "r = {r}");
        }
    }

    #[test]
    fn helix_zero_noise_lies_on_curve() {
        let d = helix(10, 0.0, 3).unwrap();
        for j in 0..10 {
            let t = d.values()[(2, j)] / HELIX_PITCH;
            assert!((0.0..=HELIX_SPAN).contains(&t));
            assert!((d.values()[(0, j)] - t.cos()).abs() < 1e-12);
            assert!((d.values()[(1, j)] - t.sin()).abs() < 1e-12);
        }
    }

    #[test]
    fn determinism_and_seed_sensitivity() {
        assert_eq!(
            circles(230, (1.0, 2.0), 0.02, 9).unwrap(),
            circles(230, (1.0, 2.0), 0.02, 9).unwrap()
        );
        assert_ne!(
            circles(230, (1.0, 2.0), 0.02, 9).unwrap(),
            circles(230, (1.0, 2.0), 0.02, 10).unwrap()
        );
        assert_eq!(helix(400, 0.05, 1).unwrap(), helix(400, 0.05, 1).unwrap());
    }

    #[test]
    fn odd_count_rejected() {
        assert!(circles(7, (1.0, 2.0), 0.0, 0).is_err());
        assert!(circles(2, (1.0, 2.0), 0.0, 0).is_err());
    }
}
