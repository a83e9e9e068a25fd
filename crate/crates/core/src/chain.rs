//! Exact Gaussian inference on a length-`T` chain.
//!
//! Each subject's latent trajectory `θ_1, …, θ_T ∈ ℝ^d` has a joint Gaussian
//! density whose precision is block-tridiagonal:
//!
//! ```text
//!   log q(θ) = -½ ρ₀ ‖θ_1‖² - ½ Σ_t ρ_t ‖θ_{t+1} - θ_t‖² + Σ_t (h_tᵀ θ_t - ½ θ_tᵀ P_t θ_t) + const
//! ```
//!
//! The prior part (`ρ₀`, `ρ_t`) is isotropic; the likelihood evidence at each
//! time arrives as a [`SitePotential`] `(P_t, h_t)`. [`chain_smooth`] runs a
//! block-Thomas elimination (forward conditioning, backward smoothing) and
//! returns marginals plus adjacent cross-covariances in `O(T d³)`.

use nalgebra::{DMatrix, DVector};

use crate::error::{FfsError, Result};
use crate::linalg::symmetrize;

/// Isotropic prior precisions of a chain.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianChainPrior {
    pub dim: usize,
    /// Precision of `θ_1` (expected `1/σ₀²`).
    pub init_precision: f64,
    /// Precision of `θ_{t+1} - θ_t`, `T-1` entries.
    pub transition_precisions: Vec<f64>,
}

impl GaussianChainPrior {
    pub fn new(dim: usize, init_precision: f64, transition_precisions: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(FfsError::InvalidArgument("chain dim must be positive".into()));
        }
        if init_precision < 0.0 || !init_precision.is_finite() {
            return Err(FfsError::InvalidArgument(format!(
                "init precision must be finite and >= 0, got {init_precision}"
            )));
        }
        if let Some(bad) = transition_precisions.iter().find(|r| **r < 0.0 || !r.is_finite()) {
            return Err(FfsError::InvalidArgument(format!(
                "transition precision must be finite and >= 0, got {bad}"
            )));
        }
        Ok(Self { dim, init_precision, transition_precisions })
    }

    /// Number of time points implied by the transition count.
    pub fn len(&self) -> usize {
        self.transition_precisions.len() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Natural-parameter likelihood message at one time point.
#[derive(Debug, Clone, PartialEq)]
pub struct SitePotential {
    pub precision: DMatrix<f64>,
    pub shift: DVector<f64>,
}

impl SitePotential {
    pub fn zeros(dim: usize) -> Self {
        Self { precision: DMatrix::zeros(dim, dim), shift: DVector::zeros(dim) }
    }

    pub fn dim(&self) -> usize {
        self.shift.len()
    }
}

/// Marginals and adjacent cross-covariances of a Gaussian chain.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainPosterior {
    pub means: Vec<DVector<f64>>,
    pub covariances: Vec<DMatrix<f64>>,
    /// `C_t = Cov(θ_t, θ_{t+1})`, `T-1` entries.
    pub cross_covariances: Vec<DMatrix<f64>>,
    /// `log det` of the full `Td × Td` precision.
    pub log_det_precision: f64,
}

impl ChainPosterior {
    pub fn len(&self) -> usize {
        self.means.len()
    }

    pub fn is_empty(&self) -> bool {
        self.means.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.means.first().map_or(0, |m| m.len())
    }

    /// `E[θ_t θ_tᵀ]`.
    pub fn second_moment(&self, t: usize) -> DMatrix<f64> {
        &self.covariances[t] + &self.means[t] * self.means[t].transpose()
    }

    /// `E‖θ_t‖²`.
    pub fn expected_norm_sq(&self, t: usize) -> f64 {
        self.means[t].norm_squared() + self.covariances[t].trace()
    }

    /// Entropy of the joint chain density.
    pub fn entropy(&self) -> f64 {
        let n = (self.len() * self.dim()) as f64;
        0.5 * n * (1.0 + (2.0 * std::f64::consts::PI).ln()) - 0.5 * self.log_det_precision
    }

    /// Chain with fixed means and isotropic marginal covariance, no temporal coupling.
    pub fn independent(means: Vec<DVector<f64>>, var: f64) -> Self {
        let d = means.first().map_or(0, |m| m.len());
        let t = means.len();
        Self {
            covariances: vec![DMatrix::identity(d, d) * var; t],
            cross_covariances: vec![DMatrix::zeros(d, d); t.saturating_sub(1)],
            log_det_precision: -((t * d) as f64) * var.ln(),
            means,
        }
    }
}

fn check_inputs(prior: &GaussianChainPrior, sites: &[SitePotential]) -> Result<()> {
    if sites.is_empty() {
        return Err(FfsError::InvalidArgument("chain needs at least one site".into()));
    }
    if prior.transition_precisions.len() + 1 != sites.len() {
        return Err(FfsError::DimensionMismatch(format!(
            "{} transition precisions for {} sites",
            prior.transition_precisions.len(),
            sites.len()
        )));
    }
    let d = prior.dim;
    for (t, s) in sites.iter().enumerate() {
        if s.precision.nrows() != d || s.precision.ncols() != d || s.shift.len() != d {
            return Err(FfsError::DimensionMismatch(format!("site {t} is not {d}-dimensional")));
        }
    }
    Ok(())
}

/// Diagonal block `J_tt` of the joint precision.
fn diagonal_block(prior: &GaussianChainPrior, site: &SitePotential, t: usize, len: usize) -> DMatrix<f64> {
    let mut iso = 0.0;
    if t == 0 {
        iso += prior.init_precision;
    }
    if t > 0 {
        iso += prior.transition_precisions[t - 1];
    }
    if t + 1 < len {
        iso += prior.transition_precisions[t];
    }
    let mut block = site.precision.clone();
    for k in 0..prior.dim {
        block[(k, k)] += iso;
    }
    block
}

/// Smooths a Gaussian chain by block-Thomas elimination.
pub fn chain_smooth(prior: &GaussianChainPrior, sites: &[SitePotential]) -> Result<ChainPosterior> {
    check_inputs(prior, sites)?;
    let len = sites.len();
    let rho = &prior.transition_precisions;

    // Forward pass: conditional precision of θ_t given θ_{t+1..} after
    // eliminating θ_1..θ_{t-1}, and the matching shift.
    let mut cond_cov: Vec<DMatrix<f64>> = Vec::with_capacity(len);
    let mut cond_shift: Vec<DVector<f64>> = Vec::with_capacity(len);
    let mut log_det = 0.0;
    for t in 0..len {
        let mut block = diagonal_block(prior, &sites[t], t, len);
        let mut shift = sites[t].shift.clone();
        if t > 0 {
            let r = rho[t - 1];
            block -= &cond_cov[t - 1] * (r * r);
            shift += (&cond_cov[t - 1] * &cond_shift[t - 1]) * r;
        }
        let block = symmetrize(&block);
        let chol = block.cholesky().ok_or(FfsError::DegeneratePosterior { block: t })?;
        log_det += 2.0 * chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>();
        cond_cov.push(symmetrize(&chol.inverse()));
        cond_shift.push(shift);
    }

    // Backward pass.
    let mut means = vec![DVector::zeros(prior.dim); len];
    let mut covariances = vec![DMatrix::zeros(prior.dim, prior.dim); len];
    let mut cross_covariances = vec![DMatrix::zeros(prior.dim, prior.dim); len - 1];
    means[len - 1] = &cond_cov[len - 1] * &cond_shift[len - 1];
    covariances[len - 1] = cond_cov[len - 1].clone();
    for t in (0..len - 1).rev() {
        let gain = &cond_cov[t] * rho[t];
        means[t] = &cond_cov[t] * &cond_shift[t] + &gain * &means[t + 1];
        let cross = &gain * &covariances[t + 1];
        covariances[t] = symmetrize(&(&cond_cov[t] + &cross * gain.transpose()));
        cross_covariances[t] = cross;
    }

    Ok(ChainPosterior { means, covariances, cross_covariances, log_det_precision: log_det })
}

/// `E‖θ_t - θ_{t+1}‖²` for `t` in `0..T-1`.
pub fn expected_transition_sq(post: &ChainPosterior, t: usize) -> Result<f64> {
    if t + 1 >= post.len() {
        return Err(FfsError::IndexOutOfRange { index: t, len: post.len().saturating_sub(1) });
    }
    let diff = &post.means[t] - &post.means[t + 1];
    let value = diff.norm_squared() + post.covariances[t].trace() + post.covariances[t + 1].trace()
        - 2.0 * post.cross_covariances[t].trace();
    Ok(value.max(0.0))
}

/// Reference implementation: materialize the `Td × Td` precision and invert it.
///
/// Guarded to `T·d ≤ 64`.
pub fn dense_joint_oracle(prior: &GaussianChainPrior, sites: &[SitePotential]) -> Result<ChainPosterior> {
    check_inputs(prior, sites)?;
    let len = sites.len();
    let d = prior.dim;
    let n = len * d;
    if n > 64 {
        return Err(FfsError::GuardExceeded(n));
    }
    let mut precision = DMatrix::zeros(n, n);
    let mut shift = DVector::zeros(n);
    for t in 0..len {
        let block = diagonal_block(prior, &sites[t], t, len);
        precision.view_mut((t * d, t * d), (d, d)).copy_from(&block);
        shift.rows_mut(t * d, d).copy_from(&sites[t].shift);
        if t + 1 < len {
            for k in 0..d {
                precision[(t * d + k, (t + 1) * d + k)] = -prior.transition_precisions[t];
                precision[((t + 1) * d + k, t * d + k)] = -prior.transition_precisions[t];
            }
        }
    }
    let chol = precision.cholesky().ok_or(FfsError::DegeneratePosterior { block: 0 })?;
    let log_det = 2.0 * chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>();
    let cov = chol.inverse();
    let mean = &cov * &shift;
    Ok(ChainPosterior {
        means: (0..len).map(|t| mean.rows(t * d, d).into_owned()).collect(),
        covariances: (0..len).map(|t| cov.view((t * d, t * d), (d, d)).into_owned()).collect(),
        cross_covariances: (0..len - 1)
            .map(|t| cov.view((t * d, (t + 1) * d), (d, d)).into_owned())
            .collect(),
        log_det_precision: log_det,
    })
}
