//! Conjugate inverse-gamma updates for the scale factors of the fusion prior.
//!
//! A half-Cauchy scale `λ ~ C⁺(0,1)` is written as the mixture
//! `λ² | η ~ IG(1/2, 1/η)`, `η ~ IG(1/2, 1)`, which keeps every full
//! conditional inverse-gamma. The per-subject global scale `τ` gets the same
//! augmentation through `tau_aux`.

use statrs::function::gamma::{digamma, ln_gamma};

use crate::chain::{expected_transition_sq, ChainPosterior};
use crate::error::{FfsError, Result};

/// Lower bound applied to expected precisions before they enter a chain prior.
pub const PRECISION_FLOOR: f64 = 1e-12;

/// Variational inverse-gamma factor `IG(shape, rate)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InverseGammaQ {
    pub shape: f64,
    pub rate: f64,
}

impl InverseGammaQ {
    pub fn new(shape: f64, rate: f64) -> Result<Self> {
        if !(shape > 0.0 && rate > 0.0 && shape.is_finite() && rate.is_finite()) {
            return Err(FfsError::InvalidArgument(format!("IG({shape}, {rate}) is not a valid inverse gamma")));
        }
        Ok(Self { shape, rate })
    }

    /// `E[1/a]`.
    pub fn mean_inverse(&self) -> f64 {
        self.shape / self.rate
    }

    /// `E[log a]`.
    pub fn mean_log(&self) -> f64 {
        self.rate.ln() - digamma(self.shape)
    }

    pub fn entropy(&self) -> f64 {
        self.shape + self.rate.ln() + ln_gamma(self.shape) - (1.0 + self.shape) * digamma(self.shape)
    }

    /// `E_q[log IG(a; shape0, rate0)]` for a prior whose rate is itself random
    /// with `E[rate0] = rate0_mean` and `E[log rate0] = rate0_mean_log`.
    pub fn expected_log_prior(&self, shape0: f64, rate0_mean: f64, rate0_mean_log: f64) -> f64 {
        shape0 * rate0_mean_log - ln_gamma(shape0) - (shape0 + 1.0) * self.mean_log()
            - rate0_mean * self.mean_inverse()
    }
}

pub fn ig_mean_inverse(q: &InverseGammaQ) -> f64 {
    q.mean_inverse()
}

/// `q(η) = IG(1, 1 + E[1/λ²])`.
pub fn update_eta(lambda2_q: &InverseGammaQ) -> InverseGammaQ {
    InverseGammaQ { shape: 1.0, rate: 1.0 + lambda2_q.mean_inverse() }
}

/// `q(λ²) = IG((d+1)/2, E[1/η] + E‖Δθ‖²·E[1/τ²]/2)`.
pub fn update_lambda2(eta_q: &InverseGammaQ, e_trans_sq: f64, e_inv_tau2: f64, d: usize) -> InverseGammaQ {
    InverseGammaQ {
        shape: (d as f64 + 1.0) / 2.0,
        rate: eta_q.mean_inverse() + 0.5 * e_trans_sq.max(0.0) * e_inv_tau2,
    }
}

/// Returns `(q(τ²), q(ξ))` for the half-Cauchy global scale with
/// `τ² | ξ ~ IG(1/2, 1/ξ)`, `ξ ~ IG(1/2, 1)`.
pub fn update_tau2(
    lambda2_qs: &[InverseGammaQ],
    e_trans_sqs: &[f64],
    d: usize,
    tau_aux_q: &InverseGammaQ,
) -> Result<(InverseGammaQ, InverseGammaQ)> {
    if lambda2_qs.len() != e_trans_sqs.len() {
        return Err(FfsError::DimensionMismatch(format!(
            "{} local scales vs {} transitions",
            lambda2_qs.len(),
            e_trans_sqs.len()
        )));
    }
    let weighted: f64 = lambda2_qs
        .iter()
        .zip(e_trans_sqs)
        .map(|(q, e)| q.mean_inverse() * e.max(0.0))
        .sum();
    let tau2 = InverseGammaQ {
        shape: (d as f64 * e_trans_sqs.len() as f64 + 1.0) / 2.0,
        rate: tau_aux_q.mean_inverse() + 0.5 * weighted,
    };
    let aux = InverseGammaQ { shape: 1.0, rate: 1.0 + tau2.mean_inverse() };
    Ok((tau2, aux))
}

/// `q(σ₀²) = IG(d/2 + a₀, E‖θ₁‖²/2 + b₀)`.
pub fn update_sigma0(e_norm_sq_theta1: f64, d: usize, a0: f64, b0: f64) -> InverseGammaQ {
    InverseGammaQ { shape: d as f64 / 2.0 + a0, rate: 0.5 * e_norm_sq_theta1.max(0.0) + b0 }
}

/// Shared transition variance of the normal-inverse-gamma baseline prior.
pub fn update_iglsm_variance(
    all_e_trans_sqs: &[f64],
    n: usize,
    len: usize,
    d: usize,
    a: f64,
    b: f64,
) -> InverseGammaQ {
    let total: f64 = all_e_trans_sqs.iter().map(|e| e.max(0.0)).sum();
    InverseGammaQ {
        shape: a + (n * d * len.saturating_sub(1)) as f64 / 2.0,
        rate: b + 0.5 * total,
    }
}

/// All scale factors owned by one subject.
#[derive(Debug, Clone, PartialEq)]
pub struct SubjectScales {
    pub eta: Vec<InverseGammaQ>,
    pub lambda2: Vec<InverseGammaQ>,
    pub tau2: InverseGammaQ,
    pub sigma0sq: InverseGammaQ,
    pub tau_aux: InverseGammaQ,
}

/// Prior-value starting point shared by the half-Cauchy mixtures.
const HALF_CAUCHY_START: InverseGammaQ = InverseGammaQ { shape: 0.5, rate: 1.0 };

impl SubjectScales {
    /// Every factor at its prior value.
    pub fn at_prior(len: usize, a0: f64, b0: f64) -> Self {
        let transitions = len.saturating_sub(1);
        Self {
            eta: vec![HALF_CAUCHY_START; transitions],
            lambda2: vec![HALF_CAUCHY_START; transitions],
            tau2: HALF_CAUCHY_START,
            sigma0sq: InverseGammaQ { shape: a0, rate: b0 },
            tau_aux: HALF_CAUCHY_START,
        }
    }

    pub fn init_precision(&self) -> f64 {
        self.sigma0sq.mean_inverse().max(PRECISION_FLOOR)
    }

    /// `E[1/τ²]·E[1/λ_t²]` for every transition.
    pub fn transition_precisions(&self) -> Vec<f64> {
        let inv_tau2 = self.tau2.mean_inverse();
        self.lambda2
            .iter()
            .map(|l| (inv_tau2 * l.mean_inverse()).max(PRECISION_FLOOR))
            .collect()
    }

    /// Updates `σ₀²` only; used by the baseline prior where transitions share one variance.
    pub fn update_init(&mut self, post: &ChainPosterior, a0: f64, b0: f64) {
        self.sigma0sq = update_sigma0(post.expected_norm_sq(0), post.dim(), a0, b0);
    }

    /// One pass over `σ₀², λ², η, τ², ξ_τ` given the subject's chain posterior.
    pub fn update(&mut self, post: &ChainPosterior, a0: f64, b0: f64) -> Result<()> {
        let d = post.dim();
        self.update_init(post, a0, b0);
        let trans: Vec<f64> = (0..post.len().saturating_sub(1))
            .map(|t| expected_transition_sq(post, t))
            .collect::<Result<_>>()?;
        let inv_tau2 = self.tau2.mean_inverse();
        for (t, e) in trans.iter().enumerate() {
            self.lambda2[t] = update_lambda2(&self.eta[t], *e, inv_tau2, d);
            self.eta[t] = update_eta(&self.lambda2[t]);
        }
        let (tau2, aux) = update_tau2(&self.lambda2, &trans, d, &self.tau_aux)?;
        self.tau2 = tau2;
        self.tau_aux = aux;
        Ok(())
    }
}
