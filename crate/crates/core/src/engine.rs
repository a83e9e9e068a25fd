//! Coordinate-ascent variational inference for the fusion-shrinkage model.
//!
//! Each subject of each factor mode owns a Gaussian chain over time and a set
//! of inverse-gamma scale factors. A sweep visits modes in ascending order and
//! subjects in ascending order within a mode; each visit builds the subject's
//! site potentials from the current moment snapshot of every other subject,
//! then alternates chain smoothing and scale updates `inner_block_iters`
//! times. Noise, tangent points and the intercept are refreshed after every
//! sweep.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;

use crate::baselines::{cp_als, cp_reconstruct};
use crate::chain::{chain_smooth, expected_transition_sq, ChainPosterior, GaussianChainPrior, SitePotential};
use crate::data::{ObservationKind, ObservationSet};
use crate::error::{FfsError, Result};
use crate::likelihood::{
    bernoulli_subject_sites, entry_moments, gaussian_noise_update, gaussian_subject_sites, intercept_update, logistic,
    tangent_a, tangent_c, xi_update, GaussianQ, ModeMoments,
};
use crate::linalg::{sorted_svd, sorted_symmetric_eigen};
use crate::metrics::auc;
use crate::postprocess::sequential_align;
use crate::scales::{update_iglsm_variance, InverseGammaQ, SubjectScales, PRECISION_FLOOR};

/// Prior on the latent transitions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PriorKind {
    /// Per-subject half-Cauchy global-local shrinkage.
    Ffs,
    /// One inverse-gamma transition variance shared by every subject of a mode.
    Iglsm,
}

impl PriorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PriorKind::Ffs => "ffs",
            PriorKind::Iglsm => "iglsm",
        }
    }
}

impl fmt::Display for PriorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PriorKind {
    type Err = FfsError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ffs" => Ok(PriorKind::Ffs),
            "iglsm" => Ok(PriorKind::Iglsm),
            other => Err(FfsError::InvalidArgument(format!("unknown prior {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub d: usize,
    /// Fractional power on the likelihood, in `(0, 1]`.
    pub alpha: f64,
    pub a_sigma0: f64,
    pub b_sigma0: f64,
    pub a_sigma: f64,
    pub b_sigma: f64,
    pub prior_kind: PriorKind,
    /// Hyperparameters of the shared transition variance under [`PriorKind::Iglsm`].
    pub iglsm_a: f64,
    pub iglsm_b: f64,
    /// Global intercept for network data.
    pub intercept: bool,
    pub intercept_prior_var: f64,
    pub max_outer_cycles: usize,
    pub inner_block_iters: usize,
    pub tol_rmse: f64,
    pub tol_auc: f64,
    /// Initial marginal variance of every chain.
    pub init_var: f64,
    /// When false the transition scales keep their current values.
    pub update_transition_scales: bool,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            d: 2,
            alpha: 0.95,
            a_sigma0: 0.5,
            b_sigma0: 0.5,
            a_sigma: 0.5,
            b_sigma: 0.5,
            prior_kind: PriorKind::Ffs,
            iglsm_a: 0.5,
            iglsm_b: 0.5,
            intercept: false,
            intercept_prior_var: 100.0,
            max_outer_cycles: 100,
            inner_block_iters: 3,
            tol_rmse: 1e-4,
            tol_auc: 0.01,
            init_var: 0.1,
            update_transition_scales: true,
            seed: 0,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("a_sigma0", self.a_sigma0),
            ("b_sigma0", self.b_sigma0),
            ("a_sigma", self.a_sigma),
            ("b_sigma", self.b_sigma),
            ("iglsm_a", self.iglsm_a),
            ("iglsm_b", self.iglsm_b),
            ("intercept_prior_var", self.intercept_prior_var),
            ("tol_rmse", self.tol_rmse),
            ("tol_auc", self.tol_auc),
            ("init_var", self.init_var),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(FfsError::InvalidArgument(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(FfsError::InvalidArgument(format!("alpha must lie in (0, 1], got {}", self.alpha)));
        }
        if self.d == 0 {
            return Err(FfsError::InvalidArgument("d must be at least 1".into()));
        }
        if self.inner_block_iters == 0 {
            return Err(FfsError::InvalidArgument("inner_block_iters must be at least 1".into()));
        }
        Ok(())
    }
}

/// Chains and scales of every subject in one factor mode.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeState {
    pub posteriors: Vec<ChainPosterior>,
    pub scales: Vec<SubjectScales>,
}

impl ModeState {
    /// Variational means at time `t` as an `n × d` matrix.
    pub fn factor_means(&self, t: usize) -> DMatrix<f64> {
        let n = self.posteriors.len();
        let d = self.posteriors.first().map_or(0, |p| p.dim());
        DMatrix::from_fn(n, d, |i, k| self.posteriors[i].means[t][k])
    }

    /// `factor_means(t)` for every `t`.
    pub fn trajectory(&self) -> Vec<DMatrix<f64>> {
        let len = self.posteriors.first().map_or(0, |p| p.len());
        (0..len).map(|t| self.factor_means(t)).collect()
    }
}

/// Auxiliary variational factors outside the subject blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct AuxState {
    /// Tangent points per likelihood dyad (network data).
    pub xi: Option<Vec<Vec<f64>>>,
    /// Noise variance factor (Gaussian data).
    pub noise_q: Option<InverseGammaQ>,
    pub intercept_q: Option<GaussianQ>,
    /// Shared transition variance per mode under [`PriorKind::Iglsm`].
    pub shared_transition: Option<Vec<InverseGammaQ>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub kind: ObservationKind,
    pub dims: Vec<usize>,
    pub len: usize,
    pub config: ModelConfig,
    pub mode_states: Vec<ModeState>,
    pub aux: AuxState,
    /// Training RMSE (Gaussian) or AUC (network) after every cycle.
    pub trace: Vec<f64>,
    pub converged: bool,
    pub cycles_used: usize,
}

impl FitResult {
    /// Predicted mean array at time `t`, see [`predict_mean`].
    pub fn predict(&self, t: usize) -> Result<Vec<f64>> {
        predict_mean(self, t)
    }

    pub fn predicted_means(&self) -> Result<Vec<Vec<f64>>> {
        (0..self.len).map(|t| predict_mean(self, t)).collect()
    }
}

fn predictor_at(kind: ObservationKind, modes: &[ModeState], intercept: Option<&GaussianQ>, t: usize) -> Vec<f64> {
    let factors: Vec<DMatrix<f64>> = match kind {
        ObservationKind::BernoulliNetwork => {
            let u = modes[0].factor_means(t);
            vec![u.clone(), u]
        }
        _ => modes.iter().map(|m| m.factor_means(t)).collect(),
    };
    let mut out = cp_reconstruct(&factors);
    if kind == ObservationKind::BernoulliNetwork {
        let b = intercept.map_or(0.0, |q| q.mean);
        for v in out.iter_mut() {
            *v = logistic(b + *v);
        }
    }
    out
}

/// Fitted mean at time `t` in the observation layout: `Û_tV̂_tᵀ` for matrices,
/// the CP sum for tensors, and edge probabilities for networks.
pub fn predict_mean(fit: &FitResult, t: usize) -> Result<Vec<f64>> {
    if t >= fit.len {
        return Err(FfsError::IndexOutOfRange { index: t, len: fit.len });
    }
    Ok(predictor_at(fit.kind, &fit.mode_states, fit.aux.intercept_q.as_ref(), t))
}

/// Spectral starting means, `[mode][t]` of shape `n_mode × d`.
fn initial_factors(data: &ObservationSet, config: &ModelConfig) -> Result<Vec<Vec<DMatrix<f64>>>> {
    let d = config.d;
    let len = data.len();
    let masked = |t: usize| -> Vec<f64> {
        (0..data.slice_len()).map(|lin| if data.is_masked_in(t, lin) { data.slices[t][lin] } else { 0.0 }).collect()
    };
    match data.kind {
        ObservationKind::GaussianMatrix => {
            let (n, p) = (data.dims[0], data.dims[1]);
            let mut stacked = Vec::with_capacity(len);
            for t in 0..len {
                let y = DMatrix::from_vec(n, p, masked(t));
                let svd = sorted_svd(&y);
                let mut s = DMatrix::zeros(n + p, d);
                for l in 0..d.min(svd.singular_values.len()) {
                    let root = svd.singular_values[l].sqrt();
                    s.view_mut((0, l), (n, 1)).copy_from(&(svd.u.column(l) * root));
                    s.view_mut((n, l), (p, 1)).copy_from(&(svd.v_t.row(l).transpose() * root));
                }
                stacked.push(s);
            }
            let aligned = sequential_align(&stacked)?.factors;
            Ok(vec![
                aligned.iter().map(|s| s.rows(0, n).into_owned()).collect(),
                aligned.iter().map(|s| s.rows(n, p).into_owned()).collect(),
            ])
        }
        ObservationKind::BernoulliNetwork => {
            let n = data.dims[0];
            let mut per_time = Vec::with_capacity(len);
            for t in 0..len {
                let y = masked(t);
                let m = DMatrix::from_fn(n, n, |i, j| {
                    if i == j || !data.is_masked_in(t, i + n * j) {
                        0.0
                    } else {
                        2.0 * y[i + n * j] - 1.0
                    }
                });
                let (values, vectors) = sorted_symmetric_eigen(&m);
                let mut u = DMatrix::zeros(n, d);
                for l in 0..d.min(n) {
                    u.set_column(l, &(vectors.column(l) * values[l].max(0.0).sqrt()));
                }
                per_time.push(u);
            }
            Ok(vec![sequential_align(&per_time)?.factors])
        }
        ObservationKind::GaussianTensor => {
            let size = data.slice_len();
            let mut sum = vec![0.0; size];
            let mut count = vec![0.0; size];
            for t in 0..len {
                for lin in 0..size {
                    if data.is_masked_in(t, lin) {
                        sum[lin] += data.slices[t][lin];
                        count[lin] += 1.0;
                    }
                }
            }
            let avg: Vec<f64> = sum.iter().zip(&count).map(|(s, c)| if *c > 0.0 { s / c } else { 0.0 }).collect();
            let fit = cp_als(&avg, &data.dims, d, 50, config.seed)?;
            Ok(fit.factors.into_iter().map(|f| vec![f; len]).collect())
        }
    }
}

/// Mutable fitting state over one dataset.
#[derive(Debug, Clone)]
pub struct CaviEngine<'a> {
    data: &'a ObservationSet,
    config: ModelConfig,
    modes: Vec<ModeState>,
    moments: Vec<ModeMoments>,
    aux: AuxState,
}

impl<'a> CaviEngine<'a> {
    /// Validates inputs and builds the spectral starting state.
    pub fn new(data: &'a ObservationSet, config: ModelConfig) -> Result<Self> {
        data.validate()?;
        config.validate()?;
        let len = data.len();
        let inits = initial_factors(data, &config)?;
        let modes: Vec<ModeState> = inits
            .into_iter()
            .map(|per_time| {
                let n = per_time[0].nrows();
                let posteriors = (0..n)
                    .map(|i| {
                        let means = per_time.iter().map(|u| u.row(i).transpose()).collect();
                        ChainPosterior::independent(means, config.init_var)
                    })
                    .collect();
                let scales = vec![SubjectScales::at_prior(len, config.a_sigma0, config.b_sigma0); n];
                ModeState { posteriors, scales }
            })
            .collect();
        let aux = AuxState {
            xi: (data.kind == ObservationKind::BernoulliNetwork).then(|| {
                (0..len)
                    .map(|t| (0..data.slice_len()).map(|lin| if data.in_likelihood(t, lin) { 1.0 } else { 0.0 }).collect())
                    .collect()
            }),
            noise_q: data.kind.is_gaussian().then_some(InverseGammaQ { shape: config.a_sigma, rate: config.b_sigma }),
            intercept_q: (config.intercept && data.kind == ObservationKind::BernoulliNetwork)
                .then_some(GaussianQ { mean: 0.0, var: config.intercept_prior_var }),
            shared_transition: (config.prior_kind == PriorKind::Iglsm)
                .then(|| vec![InverseGammaQ { shape: config.iglsm_a, rate: config.iglsm_b }; modes.len()]),
        };
        Self::from_parts(data, config, modes, aux)
    }

    /// Resumes from an explicit state.
    pub fn from_parts(data: &'a ObservationSet, config: ModelConfig, modes: Vec<ModeState>, aux: AuxState) -> Result<Self> {
        if modes.len() != data.num_modes() {
            return Err(FfsError::DimensionMismatch(format!("{} mode states for {} modes", modes.len(), data.num_modes())));
        }
        for (m, state) in modes.iter().enumerate() {
            if state.posteriors.len() != data.mode_size(m) || state.scales.len() != data.mode_size(m) {
                return Err(FfsError::DimensionMismatch(format!("mode {m} state has wrong subject count")));
            }
            if state.posteriors.iter().any(|p| p.len() != data.len() || p.dim() != config.d) {
                return Err(FfsError::DimensionMismatch(format!("mode {m} chains do not match T and d")));
            }
        }
        let moments = modes.iter().map(|s| ModeMoments::from_posteriors(&s.posteriors, config.d)).collect();
        Ok(Self { data, config, modes, moments, aux })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn modes(&self) -> &[ModeState] {
        &self.modes
    }

    pub fn modes_mut(&mut self) -> &mut [ModeState] {
        &mut self.modes
    }

    pub fn aux(&self) -> &AuxState {
        &self.aux
    }

    pub fn aux_mut(&mut self) -> &mut AuxState {
        &mut self.aux
    }

    /// Site potentials for one subject from the current moment snapshot.
    pub fn subject_sites(&self, mode: usize, subject: usize) -> Result<Vec<SitePotential>> {
        self.check_block(mode, subject)?;
        Ok(match self.data.kind {
            ObservationKind::BernoulliNetwork => bernoulli_subject_sites(
                self.data,
                &self.moments,
                self.aux.xi.as_ref().expect("network state has tangent points"),
                self.aux.intercept_q.as_ref(),
                self.config.alpha,
                subject,
            ),
            _ => gaussian_subject_sites(
                self.data,
                &self.moments,
                self.aux.noise_q.as_ref().expect("gaussian state has a noise factor"),
                self.config.alpha,
                mode,
                subject,
            ),
        })
    }

    /// Chain prior implied by the subject's current scale factors.
    pub fn chain_prior(&self, mode: usize, subject: usize) -> Result<GaussianChainPrior> {
        self.check_block(mode, subject)?;
        let scales = &self.modes[mode].scales[subject];
        let transitions = match &self.aux.shared_transition {
            Some(shared) => {
                vec![shared[mode].mean_inverse().max(PRECISION_FLOOR); self.data.len().saturating_sub(1)]
            }
            None => scales.transition_precisions(),
        };
        GaussianChainPrior::new(self.config.d, scales.init_precision(), transitions)
    }

    fn check_block(&self, mode: usize, subject: usize) -> Result<()> {
        if mode >= self.modes.len() {
            return Err(FfsError::IndexOutOfRange { index: mode, len: self.modes.len() });
        }
        let n = self.modes[mode].posteriors.len();
        if subject >= n {
            return Err(FfsError::IndexOutOfRange { index: subject, len: n });
        }
        Ok(())
    }

    fn inner_iteration(&mut self, mode: usize, subject: usize, sites: &[SitePotential]) -> Result<()> {
        let prior = self.chain_prior(mode, subject)?;
        let post = chain_smooth(&prior, sites)?;
        let (a0, b0) = (self.config.a_sigma0, self.config.b_sigma0);
        let scales = &mut self.modes[mode].scales[subject];
        if self.config.prior_kind == PriorKind::Ffs && self.config.update_transition_scales {
            scales.update(&post, a0, b0)?;
        } else {
            scales.update_init(&post, a0, b0);
        }
        self.moments[mode].set_subject(subject, &post);
        self.modes[mode].posteriors[subject] = post;
        Ok(())
    }

    /// One inner iteration of a subject block: sites, chain smoothing, scale updates.
    pub fn block_update_subject(&mut self, mode: usize, subject: usize) -> Result<()> {
        let sites = self.subject_sites(mode, subject)?;
        self.inner_iteration(mode, subject, &sites)
    }

    /// Every subject of every mode, in ascending order, `inner_block_iters` times each.
    pub fn sweep(&mut self) -> Result<()> {
        for mode in 0..self.modes.len() {
            for subject in 0..self.modes[mode].posteriors.len() {
                // sites depend only on the other subjects, so one build serves every inner pass
                let sites = self.subject_sites(mode, subject)?;
                for _ in 0..self.config.inner_block_iters {
                    self.inner_iteration(mode, subject, &sites)?;
                }
            }
        }
        Ok(())
    }

    /// Noise, shared transition variances, intercept and tangent points.
    pub fn refresh_aux(&mut self) -> Result<()> {
        let c = &self.config;
        if self.data.kind.is_gaussian() {
            self.aux.noise_q = Some(gaussian_noise_update(self.data, &self.moments, c.alpha, c.a_sigma, c.b_sigma));
        }
        if c.update_transition_scales {
            if let Some(shared) = self.aux.shared_transition.as_mut() {
                for (m, state) in self.modes.iter().enumerate() {
                    let mut all = Vec::new();
                    for post in &state.posteriors {
                        for t in 0..post.len().saturating_sub(1) {
                            all.push(expected_transition_sq(post, t)?);
                        }
                    }
                    shared[m] = update_iglsm_variance(&all, state.posteriors.len(), self.data.len(), c.d, c.iglsm_a, c.iglsm_b);
                }
            }
        }
        if self.data.kind == ObservationKind::BernoulliNetwork {
            if self.aux.intercept_q.is_some() {
                let xi = self.aux.xi.as_ref().expect("network state has tangent points");
                self.aux.intercept_q =
                    Some(intercept_update(self.data, &self.moments, xi, c.alpha, c.intercept_prior_var)?);
            }
            self.aux.xi = Some(xi_update(self.data, &self.moments, self.aux.intercept_q.as_ref()));
        }
        Ok(())
    }

    /// Current predicted mean (probabilities for networks) at time `t`.
    pub fn predict(&self, t: usize) -> Vec<f64> {
        predictor_at(self.data.kind, &self.modes, self.aux.intercept_q.as_ref(), t)
    }

    /// Training RMSE (Gaussian) or training AUC (network) over likelihood entries.
    pub fn metric(&self) -> Result<f64> {
        let mut scores = Vec::new();
        let mut targets = Vec::new();
        for t in 0..self.data.len() {
            let pred = self.predict(t);
            for lin in self.data.likelihood_entries(t) {
                scores.push(pred[lin]);
                targets.push(self.data.slices[t][lin]);
            }
        }
        if self.data.kind.is_gaussian() {
            if scores.is_empty() {
                return Err(FfsError::UndefinedMetric("no observed entries".into()));
            }
            let sse: f64 = scores.iter().zip(&targets).map(|(a, b)| (a - b).powi(2)).sum();
            Ok((sse / scores.len() as f64).sqrt())
        } else {
            let labels: Vec<bool> = targets.iter().map(|y| *y == 1.0).collect();
            auc(&scores, &labels)
        }
    }

    /// Evidence lower bound of the fractional posterior (tangent bound for networks).
    pub fn elbo(&self) -> Result<f64> {
        let c = &self.config;
        let ln_2pi = (2.0 * std::f64::consts::PI).ln();
        let mut total = 0.0;

        // likelihood
        for t in 0..self.data.len() {
            for lin in self.data.likelihood_entries(t) {
                let idx = self.data.multi_index(lin);
                let (m, m2) = entry_moments(self.data, &self.moments, t, &idx);
                let y = self.data.slices[t][lin];
                total += c.alpha
                    * match (&self.aux.noise_q, &self.aux.xi) {
                        (Some(noise), _) => {
                            -0.5 * ln_2pi - 0.5 * noise.mean_log() - 0.5 * noise.mean_inverse() * (y * y - 2.0 * y * m + m2)
                        }
                        (None, Some(xi)) => {
                            let (mb, b2) = self.aux.intercept_q.map_or((0.0, 0.0), |q| (q.mean, q.second_moment()));
                            let x = xi[t][lin];
                            tangent_a(x) * (b2 + 2.0 * mb * m + m2) + (y - 0.5) * (mb + m) + tangent_c(x)
                        }
                        (None, None) => unreachable!("state carries a noise factor or tangent points"),
                    };
            }
        }
        if let Some(noise) = &self.aux.noise_q {
            total += noise.expected_log_prior(c.a_sigma, c.b_sigma, c.b_sigma.ln()) + noise.entropy();
        }
        if let Some(q) = &self.aux.intercept_q {
            let v0 = c.intercept_prior_var;
            total += -0.5 * (ln_2pi + v0.ln()) - q.second_moment() / (2.0 * v0);
            total += 0.5 * (1.0 + ln_2pi + q.var.ln());
        }
        if let Some(shared) = &self.aux.shared_transition {
            for q in shared {
                total += q.expected_log_prior(c.iglsm_a, c.iglsm_b, c.iglsm_b.ln()) + q.entropy();
            }
        }

        // subject chains and scales
        let d = c.d as f64;
        for (m, state) in self.modes.iter().enumerate() {
            for (post, s) in state.posteriors.iter().zip(&state.scales) {
                total += -0.5 * d * (ln_2pi + s.sigma0sq.mean_log()) - 0.5 * s.sigma0sq.mean_inverse() * post.expected_norm_sq(0);
                total += s.sigma0sq.expected_log_prior(c.a_sigma0, c.b_sigma0, c.b_sigma0.ln()) + s.sigma0sq.entropy();
                for t in 0..post.len().saturating_sub(1) {
                    let e = expected_transition_sq(post, t)?;
                    let (ln_var, precision) = match &self.aux.shared_transition {
                        Some(shared) => (shared[m].mean_log(), shared[m].mean_inverse()),
                        None => (
                            s.tau2.mean_log() + s.lambda2[t].mean_log(),
                            s.tau2.mean_inverse() * s.lambda2[t].mean_inverse(),
                        ),
                    };
                    total += -0.5 * d * (ln_2pi + ln_var) - 0.5 * precision * e;
                }
                if self.aux.shared_transition.is_none() {
                    for (l, e) in s.lambda2.iter().zip(&s.eta) {
                        total += l.expected_log_prior(0.5, e.mean_inverse(), -e.mean_log()) + l.entropy();
                        total += e.expected_log_prior(0.5, 1.0, 0.0) + e.entropy();
                    }
                    if post.len() > 1 {
                        total += s.tau2.expected_log_prior(0.5, s.tau_aux.mean_inverse(), -s.tau_aux.mean_log())
                            + s.tau2.entropy();
                        total += s.tau_aux.expected_log_prior(0.5, 1.0, 0.0) + s.tau_aux.entropy();
                    }
                }
                total += post.entropy();
            }
        }
        if total.is_finite() {
            Ok(total)
        } else {
            Err(FfsError::NumericalFailure { cycle: 0, what: "non-finite ELBO".into() })
        }
    }

    pub fn into_result(self, trace: Vec<f64>, converged: bool) -> FitResult {
        FitResult {
            kind: self.data.kind,
            dims: self.data.dims.clone(),
            len: self.data.len(),
            cycles_used: trace.len(),
            config: self.config,
            mode_states: self.modes,
            aux: self.aux,
            trace,
            converged,
        }
    }
}

/// Runs outer cycles (sweep, then auxiliary refresh) until the training metric
/// changes by less than the tolerance between consecutive cycles.
pub fn fit(data: &ObservationSet, config: ModelConfig) -> Result<FitResult> {
    let tol = if data.kind.is_gaussian() { config.tol_rmse } else { config.tol_auc };
    let mut engine = CaviEngine::new(data, config)?;
    let mut trace: Vec<f64> = Vec::new();
    let mut converged = false;
    for cycle in 1..=engine.config.max_outer_cycles {
        engine.sweep()?;
        engine.refresh_aux()?;
        let metric = engine.metric()?;
        if !metric.is_finite() {
            return Err(FfsError::NumericalFailure { cycle, what: "non-finite training metric".into() });
        }
        let prev = trace.last().copied();
        trace.push(metric);
        if prev.is_some_and(|p| (metric - p).abs() < tol) {
            converged = true;
            break;
        }
    }
    Ok(engine.into_result(trace, converged))
}
