//! Damped second-order stochastic dynamics targeting the KDE, integrated
//! with a Störmer–Verlet scheme.
//!
//! The state is a pair of `ν × m` matrices `(Z, Y)` (position, velocity).
//! One step of size `Δr` with damping `f0` reads, with `b = f0·Δr/4`:
//!
//! ```text
//! Z_{ℓ+½} = Z_ℓ + (Δr/2)·Y_ℓ
//! Y_{ℓ+1} = (1−b)/(1+b)·Y_ℓ + Δr/(1+b)·𝓛(Z_{ℓ+½}) + √f0/(1+b)·ΔW̃
//! Z_{ℓ+1} = Z_{ℓ+½} + (Δr/2)·Y_{ℓ+1}
//! ```
//!
//! where `𝓛(Z) = [∇log p](Z·gᵀ)·a` is the KDE log-density gradient pulled
//! through the reduced basis, and `ΔW̃ = ΔW·a` projects a full `ν × N`
//! Wiener increment (entries `N(0, Δr)`). With the identity basis
//! (`g = a = I`) the same code is the full-order dynamics. Noise is
//! injected by the caller — steps are deterministic functions of
//! `(state, noise)` — and [`run`] draws it from per-step keyed streams, so
//! a trajectory is reproducible from its config alone.
//!
//! The undamped, noise-free core (`f0 = 0`) is symplectic: energy shows no
//! secular drift and the scheme is exactly time-reversible, which the
//! tests exercise as the integrator's correctness oracle.

use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::DMatrix;
#[allow(unused_imports)]
use num_traits::Float;

use crate::diffmaps::DiffusionBasis;
use crate::error::{Error, Result};
use crate::kde::KdeModel;
use crate::noise::{normal_matrix, stream, Domain};
use crate::pca::NormalizedData;

/// Sampling step from the kernel bandwidth: `Δr = 2π·ŝ/fac`, `fac > 1`
/// (the kernel's natural period, oversampled `fac` times).
pub fn derive_step(s_hat: f64, fac: f64) -> f64 {
    assert!(fac > 1.0, "fac must exceed 1");
    2.0 * PI * s_hat / fac
}

/// Smallest integer strictly greater than `2·ln(100)·fac/(π·f0·ŝ)` — the
/// number of steps after which the damped transient has decayed by 10⁻²,
/// i.e. the minimum spacing between retained samples for near-independence.
pub fn min_m0(f0: f64, fac: f64, s_hat: f64) -> usize {
    assert!(f0 > 0.0 && fac > 1.0 && s_hat > 0.0);
    let bound = 2.0 * 100f64.ln() * fac / (PI * f0 * s_hat);
    let next = bound.floor() + 1.0;
    next as usize
}

/// Everything needed to reproduce one sampling run bit for bit.
#[derive(Debug, Clone, PartialEq)]
pub struct IsdeRunConfig {
    /// Damping coefficient (dimensionless). `0` gives the undamped,
    /// noise-scale-zero deterministic core used for integrator checks;
    /// sampling runs need `f0 > 0`.
    pub f0: f64,
    /// Oversampling factor behind `delta_r` (kept for the record).
    pub fac: f64,
    /// Integration step.
    pub delta_r: f64,
    /// Steps between retained samples.
    pub m0: usize,
    /// Number of retained samples (each a `ν × N` matrix).
    pub n_mc: usize,
    /// Seed for the per-step noise streams.
    pub seed: u64,
}

impl IsdeRunConfig {
    /// Config with the step derived from the bandwidth: `Δr = 2π·ŝ/fac`.
    pub fn derived(s_hat: f64, f0: f64, fac: f64, m0: usize, n_mc: usize, seed: u64) -> Self {
        Self {
            f0,
            fac,
            delta_r: derive_step(s_hat, fac),
            m0,
            n_mc,
            seed,
        }
    }

    /// Check field ranges (`delta_r > 0`, `f0 ≥ 0`, `m0 ≥ 1`).
    pub fn validate(&self) -> Result<()> {
        if !(self.delta_r > 0.0) || !self.delta_r.is_finite() {
            return Err(Error::InvalidArgument {
                name: "delta_r",
                reason: "must be a finite positive real".into(),
            });
        }
        if !(self.f0 >= 0.0) || !self.f0.is_finite() {
            return Err(Error::InvalidArgument {
                name: "f0",
                reason: "must be finite and non-negative".into(),
            });
        }
        if self.m0 == 0 {
            return Err(Error::InvalidArgument {
                name: "m0",
                reason: "must be at least 1".into(),
            });
        }
        Ok(())
    }
}

/// Which space the dynamics run in: the full sample space (`g = a = I_N`)
/// or the span of a diffusion-maps basis.
#[derive(Debug, Clone, Copy)]
pub enum Basis<'a> {
    /// Full-order dynamics over all N columns.
    Full,
    /// Reduced-order dynamics in the m-dimensional basis span.
    Reduced(&'a DiffusionBasis),
}

impl<'a> Basis<'a> {
    /// Width of the state matrices (`N` full, `m` reduced).
    pub fn state_cols(&self, n_samples: usize) -> usize {
        match self {
            Basis::Full => n_samples,
            Basis::Reduced(b) => b.m(),
        }
    }

    /// Right-multiply by `a` (reduce); identity in the full basis.
    fn reduce(&self, rows: &DMatrix<f64>) -> DMatrix<f64> {
        match self {
            Basis::Full => rows.clone(),
            Basis::Reduced(b) => rows * b.a(),
        }
    }

    /// Right-multiply by `gᵀ` (back to sample space); identity when full.
    pub fn expand(&self, state: &DMatrix<f64>) -> DMatrix<f64> {
        match self {
            Basis::Full => state.clone(),
            Basis::Reduced(b) => state * b.g().transpose(),
        }
    }
}

/// Trajectory state after `step_index` completed steps.
#[derive(Debug, Clone, PartialEq)]
pub struct IsdeState {
    /// Position, `ν × m` (or `ν × N` full-order).
    pub z: DMatrix<f64>,
    /// Velocity, same shape.
    pub y: DMatrix<f64>,
    /// Completed step count.
    pub step_index: usize,
}

/// One Störmer–Verlet step. `noise` must be the full-space `ν × N`
/// increment with independent `N(0, Δr)` entries (the caller injects it;
/// pass zeros for the deterministic core). Fails with the 1-based index of
/// the offending step if the state leaves the finite range.
pub fn verlet_step(
    state: &IsdeState,
    kde: &KdeModel,
    basis: &Basis<'_>,
    config: &IsdeRunConfig,
    noise: &DMatrix<f64>,
) -> Result<IsdeState> {
    let dr = config.delta_r;
    let b = config.f0 * dr / 4.0;
    debug_assert_eq!(noise.nrows(), kde.nu());
    debug_assert_eq!(noise.ncols(), kde.n_samples());

    let z_half = &state.z + &state.y * (dr / 2.0);
    let force = match basis {
        Basis::Full => kde.potential_gradient(&z_half),
        Basis::Reduced(_) => basis.reduce(&kde.potential_gradient(&basis.expand(&z_half))),
    };
    let damp = (1.0 - b) / (1.0 + b);
    let mut y_next = &state.y * damp + force * (dr / (1.0 + b));
    if config.f0 > 0.0 {
        y_next += basis.reduce(noise) * (config.f0.sqrt() / (1.0 + b));
    }
    let z_next = z_half + &y_next * (dr / 2.0);

    let step_index = state.step_index + 1;
    if z_next.iter().any(|v| !v.is_finite()) || y_next.iter().any(|v| !v.is_finite()) {
        return Err(Error::Diverged { step: step_index });
    }
    Ok(IsdeState {
        z: z_next,
        y: y_next,
        step_index,
    })
}

/// Integrate `m0 · n_mc` steps from the data itself (`Z₀ = η_d·a`, `Y₀` a
/// fresh standard-normal draw projected the same way) and return every
/// `m0`-th state expanded back to sample space: `n_mc` matrices of shape
/// `ν × N`, together holding `n_mc · N` new realizations.
pub fn run(
    eta: &NormalizedData,
    kde: &KdeModel,
    basis: &Basis<'_>,
    config: &IsdeRunConfig,
) -> Result<Vec<DMatrix<f64>>> {
    config.validate()?;
    let (nu, n) = (eta.nu(), eta.n_samples());
    if kde.nu() != nu || kde.n_samples() != n {
        return Err(Error::DimensionMismatch {
            what: "kde/data shape",
            expected: n,
            actual: kde.n_samples(),
        });
    }
    if let Basis::Reduced(b) = basis {
        if b.n_samples() != n {
            return Err(Error::DimensionMismatch {
                what: "basis rows",
                expected: n,
                actual: b.n_samples(),
            });
        }
    }

    let mut velocity_rng = stream(config.seed, Domain::InitialVelocity, 0);
    let y0_full = normal_matrix(&mut velocity_rng, nu, n, 1.0);
    let mut state = IsdeState {
        z: basis.reduce(eta.eta()),
        y: basis.reduce(&y0_full),
        step_index: 0,
    };

    let total_steps = config.m0 * config.n_mc;
    let sqrt_dr = config.delta_r.sqrt();
    let mut retained = Vec::with_capacity(config.n_mc);
    for step in 0..total_steps {
        let mut rng = stream(config.seed, Domain::WienerIncrement, step as u64);
        let noise = normal_matrix(&mut rng, nu, n, sqrt_dr);
        state = verlet_step(&state, kde, basis, config, &noise)?;
        if state.step_index % config.m0 == 0 {
            retained.push(basis.expand(&state.z));
        }
    }
    Ok(retained)
}
