//! Choice of the basis size `m`: reduced reconstruction error of the data
//! covariance.
//!
//! For a basis of size `m`, reconstruct the data through the projector,
//! map it back to the original coordinates, and compare covariances:
//!
//! ```text
//! e_red(m) = ‖cov(x_red(m)) − cov(x)‖_F / ‖cov(x)‖_F
//! ```
//!
//! The selector sweeps a dense low-`m` schedule (every value up to 30,
//! then steps of 5) reusing a single spectral decomposition, and picks the
//! smallest swept `m` with `e_red(m) ≤ tol`. The curve is not guaranteed
//! monotone below `N`; at `m = N` the projector is the identity and the
//! error is zero to machine precision. A spectral-gap suggestion is
//! reported alongside, since eigenvalue decay and mean-square convergence
//! need not point at the same `m`; the crossing wins by default.

use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::data::{covariance_of, DataMatrix};
use crate::diffmaps::{DiffusionBasis, DiffusionSpectrum};
use crate::error::{Error, Result};
use crate::pca::{denormalize, NormalizedData, PcaModel};

/// Outcome of a reduction sweep: the sampled criterion curve, the chosen
/// size (if any crossing happened), and the spectral-gap suggestion.
#[derive(Debug, Clone, PartialEq)]
pub struct ReductionDiagnostics {
    /// Candidate basis sizes, ascending.
    pub m_values: Vec<usize>,
    /// `e_red` at each candidate.
    pub e_red: Vec<f64>,
    /// Smallest swept `m` with `e_red(m) ≤ tol`; `None` when no candidate
    /// crossed the threshold.
    pub m_selected: Option<usize>,
    /// Threshold the selection used.
    pub tol: f64,
    /// Index `α` with the largest eigenvalue drop `λ_α/λ_{α+1}` (among
    /// positive eigenvalues, ignoring the constant `λ₁`): the "choose m by
    /// the spectrum" answer.
    pub gap_index: Option<usize>,
}

/// Covariance reconstruction error of one concrete basis.
pub fn e_red(
    x: &DataMatrix,
    pca: &PcaModel,
    eta: &NormalizedData,
    basis: &DiffusionBasis,
) -> Result<f64> {
    if eta.n_samples() != basis.n_samples() {
        return Err(Error::DimensionMismatch {
            what: "e_red samples",
            expected: basis.n_samples(),
            actual: eta.n_samples(),
        });
    }
    let reconstructed = basis.reconstruct(&basis.project(eta.eta())?);
    relative_cov_error(x, pca, &reconstructed)
}

fn relative_cov_error(
    x: &DataMatrix,
    pca: &PcaModel,
    eta_reconstructed: &nalgebra::DMatrix<f64>,
) -> Result<f64> {
    let x_red = denormalize(eta_reconstructed, pca)?;
    let c = x.covariance();
    let c_red = x_red.covariance();
    Ok((c_red - &c).norm() / c.norm())
}

/// Sweep basis sizes and pick the smallest with `e_red ≤ tol`.
///
/// Schedule: every `m` in `{2, …, min(30, m_max)}`, then steps of 5 up to
/// and including `m_max`. One spectral decomposition is reused for all
/// sizes (prefix columns of the eigenvector matrix), and the projection is
/// computed eigenvalue-free, so the sweep reaches `m = N` even when
/// trailing eigenvalues are numerically zero.
pub fn select_m(
    x: &DataMatrix,
    pca: &PcaModel,
    eta: &NormalizedData,
    epsilon: f64,
    tol: f64,
    m_max: usize,
) -> Result<ReductionDiagnostics> {
    let n = eta.n_samples();
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::InvalidArgument {
            name: "tol",
            reason: "must lie in (0, 1)".into(),
        });
    }
    if m_max < 2 || m_max > n {
        return Err(Error::InvalidArgument {
            name: "m_max",
            reason: alloc::format!("need 2 ≤ m_max ≤ N = {n}, got {m_max}"),
        });
    }
    let spectrum = DiffusionSpectrum::compute(eta, epsilon)?;
    select_m_with(&spectrum, x, pca, eta, tol, m_max)
}

/// [`select_m`] over an existing decomposition (no re-diagonalization).
pub fn select_m_with(
    spectrum: &DiffusionSpectrum,
    x: &DataMatrix,
    pca: &PcaModel,
    eta: &NormalizedData,
    tol: f64,
    m_max: usize,
) -> Result<ReductionDiagnostics> {
    let m_values = sweep_schedule(m_max);
    let mut e_values = Vec::with_capacity(m_values.len());
    for &m in &m_values {
        let reconstructed = spectrum.project_onto_span(eta.eta(), m)?;
        e_values.push(relative_cov_error(x, pca, &reconstructed)?);
    }
    let m_selected = m_values
        .iter()
        .zip(&e_values)
        .find(|(_, &e)| e <= tol)
        .map(|(&m, _)| m);

    // Largest relative eigenvalue drop, skipping the constant eigenvector.
    let lambda = spectrum.eigenvalues();
    let scan = m_max.min(lambda.len() - 1);
    let mut gap_index = None;
    let mut best_ratio = 1.0;
    for alpha in 1..scan {
        let (hi, lo) = (lambda[alpha], lambda[alpha + 1]);
        if lo <= 1e-14 {
            break;
        }
        let ratio = hi / lo;
        if ratio > best_ratio {
            best_ratio = ratio;
            gap_index = Some(alpha + 1); // count of vectors up to the gap
        }
    }

    Ok(ReductionDiagnostics {
        m_values,
        e_red: e_values,
        m_selected,
        tol,
        gap_index,
    })
}

fn sweep_schedule(m_max: usize) -> Vec<usize> {
    let mut out: Vec<usize> = (2..=m_max.min(30)).collect();
    let mut m = 35;
    while m <= m_max {
        out.push(m);
        m += 5;
    }
    if *out.last().unwrap() != m_max {
        out.push(m_max);
    }
    out
}
