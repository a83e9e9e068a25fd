//! Likelihood evidence as chain site potentials.
//!
//! Every likelihood term touching subject `i` of mode `m` at time `t` is an
//! inner product `wᵀθ_it`, where `w` is the Hadamard product of the other
//! axes' factor rows. Under the mean-field factorization the site potential
//! only needs `E[w]` and `E[wwᵀ]`, which factor across independent rows:
//! `E[(a∘b)(a∘b)ᵀ] = E[aaᵀ] ∘ E[bbᵀ]`.
//!
//! All likelihood contributions are multiplied by the fractional power `α`.

use nalgebra::{DMatrix, DVector};

use crate::chain::{ChainPosterior, SitePotential};
use crate::data::{ObservationKind, ObservationSet};
use crate::error::{FfsError, Result};
use crate::scales::InverseGammaQ;

/// First and second moments of every row of one factor mode, per time.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeMoments {
    pub n: usize,
    pub d: usize,
    pub len: usize,
    mean: Vec<f64>,
    second: Vec<f64>,
}

impl ModeMoments {
    pub fn zeros(n: usize, d: usize, len: usize) -> Self {
        Self { n, d, len, mean: vec![0.0; len * n * d], second: vec![0.0; len * n * d * d] }
    }

    pub fn from_posteriors(posts: &[ChainPosterior], d: usize) -> Self {
        let len = posts.first().map_or(0, |p| p.len());
        let mut m = Self::zeros(posts.len(), d, len);
        for (i, p) in posts.iter().enumerate() {
            m.set_subject(i, p);
        }
        m
    }

    /// Point masses at the given per-time factor matrices (`n × d` each).
    pub fn point_mass(factors: &[DMatrix<f64>]) -> Self {
        let (n, d) = factors.first().map_or((0, 0), |f| (f.nrows(), f.ncols()));
        let mut m = Self::zeros(n, d, factors.len());
        for (t, f) in factors.iter().enumerate() {
            for i in 0..n {
                let row: DVector<f64> = f.row(i).transpose();
                m.set(t, i, &row, &(&row * row.transpose()));
            }
        }
        m
    }

    #[inline]
    pub fn mean(&self, t: usize, i: usize) -> &[f64] {
        let o = (t * self.n + i) * self.d;
        &self.mean[o..o + self.d]
    }

    /// Row-major `E[θθᵀ]`; symmetric so the order is immaterial.
    #[inline]
    pub fn second(&self, t: usize, i: usize) -> &[f64] {
        let dd = self.d * self.d;
        let o = (t * self.n + i) * dd;
        &self.second[o..o + dd]
    }

    pub fn set(&mut self, t: usize, i: usize, mean: &DVector<f64>, second: &DMatrix<f64>) {
        let d = self.d;
        let o = (t * self.n + i) * d;
        self.mean[o..o + d].copy_from_slice(mean.as_slice());
        let o2 = (t * self.n + i) * d * d;
        for k in 0..d {
            for l in 0..d {
                self.second[o2 + k * d + l] = second[(k, l)];
            }
        }
    }

    pub fn set_subject(&mut self, i: usize, post: &ChainPosterior) {
        for t in 0..post.len() {
            self.set(t, i, &post.means[t], &post.second_moment(t));
        }
    }

    pub fn mean_vector(&self, t: usize, i: usize) -> DVector<f64> {
        DVector::from_column_slice(self.mean(t, i))
    }

    pub fn second_matrix(&self, t: usize, i: usize) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.d, self.d, self.second(t, i))
    }
}

/// Gaussian factor `N(mean, var)` for the network intercept.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianQ {
    pub mean: f64,
    pub var: f64,
}

impl GaussianQ {
    pub fn second_moment(&self) -> f64 {
        self.mean * self.mean + self.var
    }
}

/// `E[(a∘b)(a∘b)ᵀ] = D(μ_b) E[aaᵀ] D(μ_b) + E[aaᵀ] ∘ Σ_b` for independent `a`, `b ~ N(μ_b, Σ_b)`.
pub fn hadamard_second_moment(
    e_aat: &DMatrix<f64>,
    mu_b: &DVector<f64>,
    sigma_b: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let d = mu_b.len();
    if e_aat.shape() != (d, d) || sigma_b.shape() != (d, d) {
        return Err(FfsError::DimensionMismatch(format!(
            "E[aa'] {:?}, mu_b {d}, Sigma_b {:?}",
            e_aat.shape(),
            sigma_b.shape()
        )));
    }
    let scaled = DMatrix::from_diagonal(mu_b) * e_aat * DMatrix::from_diagonal(mu_b);
    Ok(scaled + e_aat.component_mul(sigma_b))
}

/// Jaakkola–Jordan curvature `A(ξ) = -tanh(ξ/2) / (4ξ)`, with `A(0) = -1/8`.
pub fn tangent_a(xi: f64) -> f64 {
    let xi = xi.abs();
    if xi < 1e-6 {
        -0.125 + xi * xi / 96.0
    } else {
        -(0.5 * xi).tanh() / (4.0 * xi)
    }
}

/// `C(ξ) = ξ/2 - log(1 + e^ξ) - A(ξ) ξ²`.
pub fn tangent_c(xi: f64) -> f64 {
    let xi = xi.abs();
    0.5 * xi - softplus(xi) - tangent_a(xi) * xi * xi
}

pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Bernoulli log-likelihood `y·x - log(1 + eˣ)` of linear predictor `x`.
pub fn bernoulli_loglik(y: f64, x: f64) -> f64 {
    y * x - softplus(x)
}

/// Quadratic lower bound `A(ξ)x² + (y - ½)x + C(ξ)` on [`bernoulli_loglik`].
pub fn tangent_lower_bound(y: f64, x: f64, xi: f64) -> f64 {
    tangent_a(xi) * x * x + (y - 0.5) * x + tangent_c(xi)
}

/// Entry-level mean and second moment of the CP predictor `Σ_k Π_a θ^{(a)}_k`.
pub fn entry_moments(data: &ObservationSet, moments: &[ModeMoments], t: usize, idx: &[usize]) -> (f64, f64) {
    let d = moments[0].d;
    let mut mean = vec![1.0; d];
    let mut second = vec![1.0; d * d];
    for (axis, &i) in idx.iter().enumerate() {
        let m = &moments[data.mode_of_axis(axis)];
        for (acc, v) in mean.iter_mut().zip(m.mean(t, i)) {
            *acc *= v;
        }
        for (acc, v) in second.iter_mut().zip(m.second(t, i)) {
            *acc *= v;
        }
    }
    (mean.iter().sum(), second.iter().sum())
}

/// Shared accumulator: walks every likelihood entry that involves subject
/// `subject` of mode `mode` and hands `(t, lin, E[w], E[wwᵀ])` to `visit`.
fn for_each_subject_entry(
    data: &ObservationSet,
    moments: &[ModeMoments],
    mode: usize,
    subject: usize,
    mut visit: impl FnMut(usize, usize, &[f64], &[f64]),
) {
    let d = moments[mode].d;
    let dims = &data.dims;
    let strides = data.strides();
    let axes: Vec<usize> = (0..dims.len()).filter(|&a| data.mode_of_axis(a) == mode).collect();
    let mut w_mean = vec![0.0; d];
    let mut w_second = vec![0.0; d * d];
    let mut idx = vec![0usize; dims.len()];
    for t in 0..data.len() {
        for &axis in &axes {
            idx.iter_mut().for_each(|v| *v = 0);
            idx[axis] = subject;
            loop {
                let lin: usize = idx.iter().zip(&strides).map(|(i, s)| i * s).sum();
                if data.in_likelihood(t, lin) {
                    let mut first = true;
                    for (b, &i) in idx.iter().enumerate() {
                        if b == axis {
                            continue;
                        }
                        let mb = &moments[data.mode_of_axis(b)];
                        if first {
                            w_mean.copy_from_slice(mb.mean(t, i));
                            w_second.copy_from_slice(mb.second(t, i));
                            first = false;
                        } else {
                            for (acc, v) in w_mean.iter_mut().zip(mb.mean(t, i)) {
                                *acc *= v;
                            }
                            for (acc, v) in w_second.iter_mut().zip(mb.second(t, i)) {
                                *acc *= v;
                            }
                        }
                    }
                    visit(t, lin, &w_mean, &w_second);
                }
                // odometer over the other axes, axis 0 fastest
                let mut b = 0;
                loop {
                    if b == dims.len() {
                        break;
                    }
                    if b == axis {
                        b += 1;
                        continue;
                    }
                    idx[b] += 1;
                    if idx[b] < dims[b] {
                        break;
                    }
                    idx[b] = 0;
                    b += 1;
                }
                if b == dims.len() {
                    break;
                }
            }
        }
    }
}

fn empty_sites(d: usize, len: usize) -> Vec<SitePotential> {
    vec![SitePotential::zeros(d); len]
}

fn add_scaled(site: &mut SitePotential, c_prec: f64, second: &[f64], c_shift: f64, mean: &[f64]) {
    let d = site.shift.len();
    for k in 0..d {
        site.shift[k] += c_shift * mean[k];
        for l in 0..d {
            site.precision[(k, l)] += c_prec * second[k * d + l];
        }
    }
}

/// Gaussian-likelihood sites for one subject of any mode (matrix or tensor).
pub fn gaussian_subject_sites(
    data: &ObservationSet,
    moments: &[ModeMoments],
    noise_q: &InverseGammaQ,
    alpha: f64,
    mode: usize,
    subject: usize,
) -> Vec<SitePotential> {
    let d = moments[mode].d;
    let c = alpha * noise_q.mean_inverse();
    let mut sites = empty_sites(d, data.len());
    for_each_subject_entry(data, moments, mode, subject, |t, lin, w_mean, w_second| {
        let y = data.slices[t][lin];
        add_scaled(&mut sites[t], c, w_second, c * y, w_mean);
    });
    sites
}

/// Sites of every subject in `mode` of a Gaussian matrix, written out directly over the opposite mode.
pub fn gaussian_matrix_sites(
    data: &ObservationSet,
    moments: &[ModeMoments],
    noise_q: &InverseGammaQ,
    alpha: f64,
    mode: usize,
) -> Result<Vec<Vec<SitePotential>>> {
    if data.dims.len() != 2 || moments.len() != 2 || mode > 1 {
        return Err(FfsError::DimensionMismatch("matrix sites need two modes".into()));
    }
    let other = 1 - mode;
    let (n_self, n_other) = (data.dims[mode], data.dims[other]);
    if moments[other].n != n_other || moments[mode].n != n_self || moments[other].len != data.len() {
        return Err(FfsError::DimensionMismatch("moment snapshot does not match data".into()));
    }
    let d = moments[mode].d;
    let c = alpha * noise_q.mean_inverse();
    let rows = data.dims[0];
    let mut out = Vec::with_capacity(n_self);
    for i in 0..n_self {
        let mut sites = empty_sites(d, data.len());
        for (t, site) in sites.iter_mut().enumerate() {
            for j in 0..n_other {
                let lin = if mode == 0 { i + rows * j } else { j + rows * i };
                if !data.in_likelihood(t, lin) {
                    continue;
                }
                let y = data.slices[t][lin];
                add_scaled(site, c, moments[other].second(t, j), c * y, moments[other].mean(t, j));
            }
        }
        out.push(sites);
    }
    Ok(out)
}

/// Sites of every subject in `mode` of a Gaussian tensor.
pub fn tensor_sites(
    data: &ObservationSet,
    moments: &[ModeMoments],
    noise_q: &InverseGammaQ,
    alpha: f64,
    mode: usize,
) -> Result<Vec<Vec<SitePotential>>> {
    if mode >= data.num_modes() {
        return Err(FfsError::IndexOutOfRange { index: mode, len: data.num_modes() });
    }
    if moments.len() != data.num_modes() {
        return Err(FfsError::DimensionMismatch("one moment snapshot per mode required".into()));
    }
    Ok((0..data.mode_size(mode))
        .map(|i| gaussian_subject_sites(data, moments, noise_q, alpha, mode, i))
        .collect())
}

/// Tangent-bound sites for one node of a symmetric network.
pub fn bernoulli_subject_sites(
    data: &ObservationSet,
    moments: &[ModeMoments],
    xi: &[Vec<f64>],
    intercept: Option<&GaussianQ>,
    alpha: f64,
    subject: usize,
) -> Vec<SitePotential> {
    let d = moments[0].d;
    let mu_b = intercept.map_or(0.0, |q| q.mean);
    let mut sites = empty_sites(d, data.len());
    for_each_subject_entry(data, moments, 0, subject, |t, lin, w_mean, w_second| {
        let a = tangent_a(xi[t][lin]);
        let y = data.slices[t][lin];
        add_scaled(&mut sites[t], -2.0 * alpha * a, w_second, alpha * (y - 0.5 + 2.0 * a * mu_b), w_mean);
    });
    sites
}

/// Tangent-bound sites for every node of a symmetric network.
pub fn bernoulli_sites(
    data: &ObservationSet,
    moments: &[ModeMoments],
    xi: &[Vec<f64>],
    intercept: Option<&GaussianQ>,
    alpha: f64,
) -> Result<Vec<Vec<SitePotential>>> {
    if data.kind != ObservationKind::BernoulliNetwork {
        return Err(FfsError::InvalidArgument("bernoulli sites need network data".into()));
    }
    check_xi(data, xi)?;
    Ok((0..data.dims[0])
        .map(|i| bernoulli_subject_sites(data, moments, xi, intercept, alpha, i))
        .collect())
}

fn check_xi(data: &ObservationSet, xi: &[Vec<f64>]) -> Result<()> {
    if xi.len() != data.len() || xi.iter().any(|x| x.len() != data.slice_len()) {
        return Err(FfsError::DimensionMismatch("xi shape differs from data".into()));
    }
    if xi.iter().flatten().any(|v| *v < 0.0 || !v.is_finite()) {
        return Err(FfsError::InvalidArgument("tangent points must be finite and >= 0".into()));
    }
    Ok(())
}

/// `IG(a_σ + αN/2, b_σ + α/2 Σ E[(Y - m)²])` over likelihood entries.
pub fn gaussian_noise_update(
    data: &ObservationSet,
    moments: &[ModeMoments],
    alpha: f64,
    a_sigma: f64,
    b_sigma: f64,
) -> InverseGammaQ {
    let mut count = 0usize;
    let mut sse = 0.0;
    for t in 0..data.len() {
        for lin in data.likelihood_entries(t) {
            let idx = data.multi_index(lin);
            let (m, m2) = entry_moments(data, moments, t, &idx);
            let y = data.slices[t][lin];
            sse += (y * y - 2.0 * y * m + m2).max(0.0);
            count += 1;
        }
    }
    InverseGammaQ { shape: a_sigma + alpha * count as f64 / 2.0, rate: b_sigma + 0.5 * alpha * sse }
}

/// `ξ = sqrt(E[(b + m)²])` for every likelihood dyad; other entries stay zero.
pub fn xi_update(data: &ObservationSet, moments: &[ModeMoments], intercept: Option<&GaussianQ>) -> Vec<Vec<f64>> {
    let mut xi = vec![vec![0.0; data.slice_len()]; data.len()];
    for (t, row) in xi.iter_mut().enumerate() {
        for lin in data.likelihood_entries(t) {
            let idx = data.multi_index(lin);
            let (m, m2) = entry_moments(data, moments, t, &idx);
            let e2 = match intercept {
                Some(q) => q.second_moment() + 2.0 * q.mean * m + m2,
                None => m2,
            };
            row[lin] = e2.max(0.0).sqrt();
        }
    }
    xi
}

/// Gaussian update of the global network intercept under a `N(0, prior_var)` prior.
pub fn intercept_update(
    data: &ObservationSet,
    moments: &[ModeMoments],
    xi: &[Vec<f64>],
    alpha: f64,
    prior_var: f64,
) -> Result<GaussianQ> {
    check_xi(data, xi)?;
    let mut precision = 1.0 / prior_var;
    let mut linear = 0.0;
    for t in 0..data.len() {
        for lin in data.likelihood_entries(t) {
            let idx = data.multi_index(lin);
            let (m, _) = entry_moments(data, moments, t, &idx);
            let a = tangent_a(xi[t][lin]);
            precision -= 2.0 * alpha * a;
            linear += alpha * (data.slices[t][lin] - 0.5 + 2.0 * a * m);
        }
    }
    let var = 1.0 / precision;
    Ok(GaussianQ { mean: var * linear, var })
}
