//! Diffusion-maps basis of the data set.
//!
//! From normalized data `η^{d,1..N}` build the Gaussian kernel matrix
//! `K_ij = exp(−‖η_i − η_j‖²/(4ε))`, its row sums `b`, and the transition
//! matrix `P = b⁻¹K` of the induced random walk on the data points. `P` is
//! similar to the symmetric `P_S = b^{−1/2} K b^{−1/2}`, so its spectrum is
//! obtained from a symmetric eigensolve. The right eigenvectors of `P` are
//! `ψ^α = b^{−1/2} φ^α`, b-orthonormal (`ψᵀ diag(b) ψ = I`); the basis
//! vectors are the scaled columns `g^α = λ_α^κ ψ^α`.
//!
//! The reduced representation of row-vectors `η` is `z = η·a` with
//! `a = g (gᵀg)⁻¹`, so `η ↦ η·a·gᵀ` is the orthogonal projection of each
//! row onto `span(g)`. Internally `a` is formed as `ψ (ψᵀψ)⁻¹ λ^{−κ}` —
//! algebraically identical but without the `λ^{2κ}` conditioning of the
//! literal normal equations. The projection itself never touches `λ`, so
//! every projection-level result is invariant under `κ` and under positive
//! rescaling of basis columns; tests assert this rather than assume it.

use alloc::vec::Vec;
use nalgebra::{Cholesky, DMatrix, DVector};
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::pca::NormalizedData;

/// Eigenvalues this small (or negative) make `λ^{−κ}` meaningless; the
/// basis is refused at that size.
const LAMBDA_FLOOR: f64 = 1e-14;

/// Full spectral decomposition of the transition matrix for one `(η, ε)`
/// pair. One decomposition serves every basis size `m` (prefix columns),
/// which is what the reduction sweep relies on.
#[derive(Debug, Clone)]
pub struct DiffusionSpectrum {
    epsilon: f64,
    /// All N eigenvalues of `P_S` (= those of `P`), descending.
    lambda: DVector<f64>,
    /// `N × N`; column α is the right eigenvector `ψ^α`, b-orthonormal.
    psi: DMatrix<f64>,
    /// Kernel row sums `b`.
    b_diag: DVector<f64>,
}

impl DiffusionSpectrum {
    /// Assemble the kernel and diagonalize the symmetrized transition
    /// matrix. `O(N²ν)` assembly plus an `O(N³)` dense eigensolve.
    pub fn compute(eta: &NormalizedData, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return Err(Error::InvalidArgument {
                name: "epsilon",
                reason: "must be a finite positive real".into(),
            });
        }
        let n = eta.n_samples();
        let values = eta.eta();

        // Pairwise kernel via the Gram matrix; d² clamped at 0 against
        // cancellation. K has unit diagonal and entries in (0, 1].
        let gram = values.transpose() * values;
        let mut kernel = DMatrix::zeros(n, n);
        for i in 0..n {
            kernel[(i, i)] = 1.0;
            for j in (i + 1)..n {
                let d2 = (gram[(i, i)] + gram[(j, j)] - 2.0 * gram[(i, j)]).max(0.0);
                let k = (-d2 / (4.0 * epsilon)).exp();
                kernel[(i, j)] = k;
                kernel[(j, i)] = k;
            }
        }
        let b_diag = &kernel * DVector::from_element(n, 1.0);

        // Symmetrized transition matrix P_S = b^{−1/2} K b^{−1/2}.
        let inv_sqrt_b: DVector<f64> = b_diag.map(|b| 1.0 / b.sqrt());
        let mut p_s = kernel;
        for i in 0..n {
            for j in i..n {
                let v = p_s[(i, j)] * inv_sqrt_b[i] * inv_sqrt_b[j];
                p_s[(i, j)] = v;
                p_s[(j, i)] = v;
            }
        }

        let eigen = nalgebra::SymmetricEigen::try_new(p_s, f64::EPSILON, 0).ok_or(
            Error::EigenFailure {
                what: "transition matrix",
            },
        )?;

        // Descending eigenvalues, original index as tie-break.
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| {
            eigen.eigenvalues[j]
                .partial_cmp(&eigen.eigenvalues[i])
                .unwrap()
                .then(i.cmp(&j))
        });

        let mut lambda = DVector::zeros(n);
        let mut psi = DMatrix::zeros(n, n);
        for (k, &idx) in order.iter().enumerate() {
            lambda[k] = eigen.eigenvalues[idx];
            let mut col = eigen.eigenvectors.column(idx).clone_owned();
            // Sign convention: first nonzero component positive.
            if let Some(&lead) = col.iter().find(|v| **v != 0.0) {
                if lead < 0.0 {
                    col.neg_mut();
                }
            }
            // ψ = b^{−1/2} ∘ φ; b-orthonormal because φ is orthonormal.
            col.component_mul_assign(&inv_sqrt_b);
            psi.set_column(k, &col);
        }

        Ok(Self {
            epsilon,
            lambda,
            psi,
            b_diag,
        })
    }

    /// Smoothing parameter the spectrum was built with.
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// All N eigenvalues, descending.
    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.lambda
    }

    /// Kernel row sums `b`.
    pub fn b_diag(&self) -> &DVector<f64> {
        &self.b_diag
    }

    /// Sample count N.
    pub fn n_samples(&self) -> usize {
        self.lambda.len()
    }

    /// Build the size-`m` basis with eigenvalue scaling `λ^κ`.
    ///
    /// Requires `1 < m ≤ N` and `λ_m > 10⁻¹⁴`; a numerically zero (or
    /// negative) trailing eigenvalue is reported with its index, and the
    /// remedy is a larger `ε` or a smaller `m`.
    pub fn basis(&self, m: usize, kappa: u32) -> Result<DiffusionBasis> {
        let n = self.n_samples();
        if m <= 1 || m > n {
            return Err(Error::InvalidArgument {
                name: "m",
                reason: alloc::format!("basis size must satisfy 1 < m ≤ N = {n}, got {m}"),
            });
        }
        for alpha in 0..m {
            if !(self.lambda[alpha] > LAMBDA_FLOOR) {
                return Err(Error::DegenerateSpectrum {
                    index: alpha + 1,
                    value: self.lambda[alpha],
                });
            }
        }

        let psi_m = self.psi.columns(0, m).clone_owned();
        let mut g = psi_m.clone();
        for alpha in 0..m {
            let scale = self.lambda[alpha].powi(kappa as i32);
            g.column_mut(alpha).scale_mut(scale);
        }

        // a = ψ (ψᵀψ)⁻¹ λ^{−κ}  (≡ g(gᵀg)⁻¹ without squaring λ).
        let gram = psi_m.transpose() * &psi_m;
        let chol = Cholesky::new(gram).ok_or(Error::EigenFailure {
            what: "basis normal equations",
        })?;
        let mut inv_scale = DMatrix::zeros(m, m);
        for alpha in 0..m {
            inv_scale[(alpha, alpha)] = self.lambda[alpha].powi(-(kappa as i32));
        }
        let a = &psi_m * chol.solve(&inv_scale);

        Ok(DiffusionBasis {
            epsilon: self.epsilon,
            kappa,
            m,
            lambda: self.lambda.rows(0, m).clone_owned(),
            g,
            a,
            b_diag: self.b_diag.clone(),
        })
    }

    /// Project the rows of a `k × N` matrix onto the span of the first `m`
    /// eigenvectors: `rows ↦ rows·P` with `P = ψ_m(ψ_mᵀψ_m)⁻¹ψ_mᵀ`.
    ///
    /// This is the `κ`-free workhorse of the reduction sweep; it stays
    /// defined even where trailing `λ` are numerically zero.
    pub fn project_onto_span(&self, rows: &DMatrix<f64>, m: usize) -> Result<DMatrix<f64>> {
        let n = self.n_samples();
        if rows.ncols() != n {
            return Err(Error::DimensionMismatch {
                what: "projection columns",
                expected: n,
                actual: rows.ncols(),
            });
        }
        if m == 0 || m > n {
            return Err(Error::InvalidArgument {
                name: "m",
                reason: alloc::format!("need 1 ≤ m ≤ N = {n}, got {m}"),
            });
        }
        let psi_m = self.psi.columns(0, m);
        let gram = psi_m.transpose() * psi_m;
        let chol = Cholesky::new(gram).ok_or(Error::EigenFailure {
            what: "projection normal equations",
        })?;
        let coeff = chol.solve(&(psi_m.transpose() * rows.transpose()));
        Ok((psi_m * coeff).transpose())
    }
}

/// Reduced diffusion-maps basis: `g` (N×m scaled eigenvectors), its
/// pseudo-inverse factor `a = g(gᵀg)⁻¹`, and the spectrum slice behind
/// them. Defining identities: `gᵀa = I_m`, and `a·gᵀ` is the symmetric
/// idempotent projector onto `span(g)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionBasis {
    epsilon: f64,
    kappa: u32,
    m: usize,
    lambda: DVector<f64>,
    g: DMatrix<f64>,
    a: DMatrix<f64>,
    b_diag: DVector<f64>,
}

impl DiffusionBasis {
    /// Rebuild a basis from stored fields (deserialization). Checks shapes
    /// and the defining identity `gᵀa = I_m`.
    pub fn from_stored(
        epsilon: f64,
        kappa: u32,
        lambda: Vec<f64>,
        g: DMatrix<f64>,
        a: DMatrix<f64>,
        b_diag: Vec<f64>,
    ) -> Result<Self> {
        let m = lambda.len();
        let n = b_diag.len();
        if g.nrows() != n || g.ncols() != m || a.nrows() != n || a.ncols() != m {
            return Err(Error::DimensionMismatch {
                what: "basis shapes",
                expected: n * m,
                actual: g.nrows() * g.ncols(),
            });
        }
        if m <= 1 {
            return Err(Error::InvalidArgument {
                name: "m",
                reason: "basis needs at least 2 columns".into(),
            });
        }
        let gta = g.transpose() * &a;
        let mut err = 0.0f64;
        for i in 0..m {
            for j in 0..m {
                let target = if i == j { 1.0 } else { 0.0 };
                err = err.max((gta[(i, j)] - target).abs());
            }
        }
        if err > 1e-6 {
            return Err(Error::InvalidArgument {
                name: "a",
                reason: alloc::format!("gᵀa deviates from identity by {err:.2e}"),
            });
        }
        Ok(Self {
            epsilon,
            kappa,
            m,
            lambda: DVector::from_vec(lambda),
            g,
            a,
            b_diag: DVector::from_vec(b_diag),
        })
    }

    /// Smoothing parameter ε.
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Eigenvalue-scaling exponent κ.
    pub fn kappa(&self) -> u32 {
        self.kappa
    }

    /// Basis size m.
    pub fn m(&self) -> usize {
        self.m
    }

    /// Sample count N the basis was built on.
    pub fn n_samples(&self) -> usize {
        self.g.nrows()
    }

    /// Eigenvalues `λ_1..λ_m`, descending.
    pub fn lambda(&self) -> &DVector<f64> {
        &self.lambda
    }

    /// Basis matrix `g` (N×m), columns `λ_α^κ ψ^α`.
    pub fn g(&self) -> &DMatrix<f64> {
        &self.g
    }

    /// Pseudo-inverse factor `a = g(gᵀg)⁻¹` (N×m).
    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    /// Kernel row sums `b` from the underlying spectrum.
    pub fn b_diag(&self) -> &DVector<f64> {
        &self.b_diag
    }

    /// Reduced coordinates `z = rows·a` of a `k × N` matrix.
    pub fn project(&self, rows: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if rows.ncols() != self.n_samples() {
            return Err(Error::DimensionMismatch {
                what: "project columns",
                expected: self.n_samples(),
                actual: rows.ncols(),
            });
        }
        Ok(rows * &self.a)
    }

    /// Back to sample space: `z·gᵀ` for `k × m` reduced coordinates.
    pub fn reconstruct(&self, z: &DMatrix<f64>) -> DMatrix<f64> {
        assert_eq!(z.ncols(), self.m, "reduced coordinate size");
        z * self.g.transpose()
    }

    /// Diagnostic clone with column `α` of `g` multiplied by `factors[α]`
    /// and `a` recomputed from scratch (QR). The projector `a·gᵀ` — and so
    /// everything downstream — must not change; tests assert exactly that.
    pub fn rescaled_columns(&self, factors: &[f64]) -> Result<Self> {
        if factors.len() != self.m {
            return Err(Error::DimensionMismatch {
                what: "rescale factors",
                expected: self.m,
                actual: factors.len(),
            });
        }
        if factors.iter().any(|&f| !(f > 0.0) || !f.is_finite()) {
            return Err(Error::InvalidArgument {
                name: "factors",
                reason: "must all be positive and finite".into(),
            });
        }
        let mut g = self.g.clone();
        for (alpha, &f) in factors.iter().enumerate() {
            g.column_mut(alpha).scale_mut(f);
        }
        // a = Q R^{−ᵀ} from the thin QR of g.
        let qr = g.clone().qr();
        let m = self.m;
        let rinv = qr
            .r()
            .solve_upper_triangular(&DMatrix::identity(m, m))
            .ok_or(Error::EigenFailure {
                what: "rescaled basis QR",
            })?;
        let a = qr.q() * rinv.transpose();
        Ok(Self {
            epsilon: self.epsilon,
            kappa: self.kappa,
            m: self.m,
            lambda: self.lambda.clone(),
            g,
            a,
            b_diag: self.b_diag.clone(),
        })
    }
}

/// One-shot basis construction; see [`DiffusionSpectrum`] for reusing the
/// decomposition across several `m`.
pub fn build_basis(
    eta: &NormalizedData,
    epsilon: f64,
    kappa: u32,
    m: usize,
) -> Result<DiffusionBasis> {
    DiffusionSpectrum::compute(eta, epsilon)?.basis(m, kappa)
}

/// First `m_max` eigenvalues of the transition matrix, descending.
pub fn spectrum(eta: &NormalizedData, epsilon: f64, m_max: usize) -> Result<DVector<f64>> {
    let n = eta.n_samples();
    if m_max == 0 || m_max > n {
        return Err(Error::InvalidArgument {
            name: "m_max",
            reason: alloc::format!("need 1 ≤ m_max ≤ N = {n}, got {m_max}"),
        });
    }
    let s = DiffusionSpectrum::compute(eta, epsilon)?;
    Ok(s.eigenvalues().rows(0, m_max).clone_owned())
}

/// Median of the pairwise squared distances of the data — a labeled
/// *heuristic* starting point when choosing `ε` (which has no selection
/// rule; pick it from the spectrum).
pub fn median_pairwise_sq_distance(eta: &NormalizedData) -> f64 {
    let n = eta.n_samples();
    let values = eta.eta();
    let mut d2: Vec<f64> = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            d2.push((values.column(i) - values.column(j)).norm_squared());
        }
    }
    d2.sort_by(|x, y| x.partial_cmp(y).unwrap());
    if d2.is_empty() {
        return 0.0;
    }
    let mid = d2.len() / 2;
    if d2.len() % 2 == 1 {
        d2[mid]
    } else {
        0.5 * (d2[mid - 1] + d2[mid])
    }
}
