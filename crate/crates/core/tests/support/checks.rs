//! Oracle comparisons shared by the integration tests and the acceptance run.
//! Each returns the worst discrepancy found so callers choose the tolerance.

use ffs::baselines::{fused_lasso_1d, fused_objective, l1_trendfilter_pg, lambda_max};
use ffs::likelihood::{bernoulli_loglik, hadamard_second_moment, tangent_lower_bound};
use ffs::postprocess::{misclustering_loss, rand_index, solve_procrustes};
use ffs::scales::{update_eta, update_iglsm_variance, update_lambda2, update_sigma0, update_tau2};
use ffs::{chain_smooth, dense_joint_oracle, InverseGammaQ};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use statrs::function::gamma::ln_gamma;

use super::kkt::fused_kkt_violation;
use super::partitions::{misclustering_perms, partitions, rand_index_pairs};
use super::procrustes_grid::grid_min_objective;
use super::quad::{fit_inverse_gamma, fit_inverse_gamma_on, ig_expect, ig_log_density, LogGrid};
use super::random::{max_abs_diff, normal_matrix, normal_vector, random_chain, random_spd};

/// Worst max-abs gap between the smoother and the dense joint inverse.
pub fn chain_vs_dense(instances: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..instances {
        let d = rng.random_range(1..=3);
        let len = rng.random_range(1..=8);
        let (prior, sites) = random_chain(&mut rng, len, d);
        let fast = chain_smooth(&prior, &sites).unwrap();
        let dense = dense_joint_oracle(&prior, &sites).unwrap();
        for t in 0..len {
            worst = worst.max((&fast.means[t] - &dense.means[t]).abs().max());
            worst = worst.max(max_abs_diff(&fast.covariances[t], &dense.covariances[t]));
        }
        for t in 0..len - 1 {
            worst = worst.max(max_abs_diff(&fast.cross_covariances[t], &dense.cross_covariances[t]));
        }
    }
    worst
}

#[derive(Debug, Default, Clone, Copy)]
pub struct ScaleReport {
    pub eta: f64,
    pub lambda2: f64,
    pub tau2: f64,
    pub tau_aux: f64,
    pub sigma0: f64,
    pub iglsm: f64,
}

impl ScaleReport {
    pub fn worst(&self) -> f64 {
        [self.eta, self.lambda2, self.tau2, self.tau_aux, self.sigma0, self.iglsm]
            .into_iter()
            .fold(0.0, f64::max)
    }
}

/// Relative disagreement on (shape, rate), relative to max(1, |oracle|).
fn ig_gap(got: &InverseGammaQ, oracle: (f64, f64)) -> f64 {
    let s = (got.shape - oracle.0).abs() / oracle.0.abs().max(1.0);
    let r = (got.rate - oracle.1).abs() / oracle.1.abs().max(1.0);
    s.max(r)
}

fn random_ig(rng: &mut ChaCha8Rng) -> InverseGammaQ {
    InverseGammaQ::new(rng.random_range(0.5..5.0), rng.random_range(0.1..10.0)).unwrap()
}

/// `log N(x; 0, v·I_d)` with the squared norm known only in expectation.
fn gauss_log(d: usize, v: f64, e_norm_sq: f64, e_inv_scale: f64) -> f64 {
    -0.5 * d as f64 * (2.0 * std::f64::consts::PI * v).ln() - e_norm_sq * e_inv_scale / (2.0 * v)
}

/// Each conditional is written from the model densities: half-Cauchy
/// mixtures `λ²|η ~ IG(½, 1/η)`, `η ~ IG(½, 1)` (same for `τ², ξ`), Gaussian
/// transitions `θ_{t+1} - θ_t ~ N(0, τ²λ_t² I)`, `θ_1 ~ N(0, σ₀² I)`.
/// Expectations of the other factors are taken by quadrature of their q.
pub fn scale_updates_vs_quadrature(instances: usize, seed: u64) -> ScaleReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rep = ScaleReport::default();
    for _ in 0..instances {
        let d = rng.random_range(1..=4);

        // η given q(λ²)
        let l2 = random_ig(&mut rng);
        let e_inv_l2 = ig_expect(l2.shape, l2.rate, |x| 1.0 / x);
        let oracle = fit_inverse_gamma(|eta| {
            ig_log_density(0.5, 1.0, eta) + 0.5 * (1.0 / eta).ln() - e_inv_l2 / eta
        });
        rep.eta = rep.eta.max(ig_gap(&update_eta(&l2), oracle));

        // λ² given q(η), q(τ²), E‖Δ‖²
        let eta = random_ig(&mut rng);
        let tau2 = random_ig(&mut rng);
        let e_trans: f64 = rng.random_range(0.0..20.0);
        let e_inv_eta = ig_expect(eta.shape, eta.rate, |x| 1.0 / x);
        let e_inv_tau2 = ig_expect(tau2.shape, tau2.rate, |x| 1.0 / x);
        let oracle = fit_inverse_gamma(|l2| {
            // E_η[log IG(λ²; ½, 1/η)] up to λ²-free terms, then the transition
            -1.5 * l2.ln() - e_inv_eta / l2 + gauss_log(d, l2, e_trans, e_inv_tau2)
        });
        rep.lambda2 = rep.lambda2.max(ig_gap(&update_lambda2(&eta, e_trans, e_inv_tau2, d), oracle));

        // (τ², ξ) by 2-D quadrature of the augmented conditional
        let steps = rng.random_range(1..=8);
        let lambdas: Vec<InverseGammaQ> = (0..steps).map(|_| random_ig(&mut rng)).collect();
        let trans: Vec<f64> = (0..steps).map(|_| rng.random_range(0.0..20.0)).collect();
        let e_inv_lambdas: Vec<f64> =
            lambdas.iter().map(|q| ig_expect(q.shape, q.rate, |x| 1.0 / x)).collect();
        let xi_old = random_ig(&mut rng);
        // log p(τ², ξ | rest) = log IG(τ²; ½, 1/ξ) + log IG(ξ; ½, 1) + Σ_t log N(Δ_t; 0, τ²λ_t²)
        let lg_half = ln_gamma(0.5);
        let mixture = |t2: f64, xi: f64, ln_t2: f64, ln_xi: f64| -> f64 {
            -0.5 * ln_xi - lg_half - 1.5 * ln_t2 - 1.0 / (xi * t2) - lg_half - 1.5 * ln_xi - 1.0 / xi
        };
        let transitions = |t2: f64| -> f64 {
            trans.iter().zip(&e_inv_lambdas).map(|(e, w)| gauss_log(d, t2, *e, *w)).sum()
        };
        let xi_atoms = LogGrid::with_scan(|x| ig_log_density(xi_old.shape, xi_old.rate, x), 4000, 1200).atoms();
        let tau_grid = LogGrid::with_scan(
            |t2| {
                let ln_t2 = t2.ln();
                let inner: f64 = xi_atoms.iter().map(|(xi, p)| p * mixture(t2, *xi, ln_t2, xi.ln())).sum();
                inner + transitions(t2)
            },
            4000,
            4000,
        );
        let tau_oracle = fit_inverse_gamma_on(&tau_grid);
        let tau_atoms = LogGrid::with_scan(|x| ig_log_density(tau_oracle.0, tau_oracle.1, x), 4000, 1200).atoms();
        let tau_atoms: Vec<(f64, f64, f64)> = tau_atoms.into_iter().map(|(t2, p)| (t2, p, transitions(t2))).collect();
        let xi_grid = LogGrid::with_scan(
            |xi| {
                let ln_xi = xi.ln();
                tau_atoms.iter().map(|(t2, p, tr)| p * (mixture(*t2, xi, t2.ln(), ln_xi) + tr)).sum()
            },
            4000,
            4000,
        );
        let xi_oracle = fit_inverse_gamma_on(&xi_grid);
        let (tau_q, xi_q) = update_tau2(&lambdas, &trans, d, &xi_old).unwrap();
        rep.tau2 = rep.tau2.max(ig_gap(&tau_q, tau_oracle));
        rep.tau_aux = rep.tau_aux.max(ig_gap(&xi_q, xi_oracle));

        // σ₀²
        let (a0, b0) = (rng.random_range(0.1..3.0), rng.random_range(0.1..3.0));
        let e_norm: f64 = rng.random_range(0.0..20.0);
        let oracle = fit_inverse_gamma(|s| ig_log_density(a0, b0, s) + gauss_log(d, s, e_norm, 1.0));
        rep.sigma0 = rep.sigma0.max(ig_gap(&update_sigma0(e_norm, d, a0, b0), oracle));

        // shared transition variance
        let (n, len) = (rng.random_range(1..=4), rng.random_range(2..=6));
        let (a, b) = (rng.random_range(0.1..3.0), rng.random_range(0.1..3.0));
        let all: Vec<f64> = (0..n * (len - 1)).map(|_| rng.random_range(0.0..5.0)).collect();
        let oracle = fit_inverse_gamma(|v| {
            ig_log_density(a, b, v) + all.iter().map(|e| gauss_log(d, v, *e, 1.0)).sum::<f64>()
        });
        rep.iglsm = rep.iglsm.max(ig_gap(&update_iglsm_variance(&all, n, len, d, a, b), oracle));
    }
    rep
}

/// Largest relative Frobenius error of the Hadamard second-moment formula
/// against `samples` Monte Carlo draws, over `instances` random 3×3 cases.
pub fn hadamard_vs_monte_carlo(instances: usize, samples: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = 3;
    let mut worst: f64 = 0.0;
    for _ in 0..instances {
        let (mu_a, mu_b) = (normal_vector(&mut rng, d), normal_vector(&mut rng, d));
        let (sig_a, sig_b) = (random_spd(&mut rng, d), random_spd(&mut rng, d));
        let la = sig_a.clone().cholesky().unwrap().l();
        let lb = sig_b.clone().cholesky().unwrap().l();
        let e_aat = &sig_a + &mu_a * mu_a.transpose();
        let formula = hadamard_second_moment(&e_aat, &mu_b, &sig_b).unwrap();
        let mut acc = DMatrix::<f64>::zeros(d, d);
        let mut z = DVector::<f64>::zeros(d);
        for _ in 0..samples {
            z.iter_mut().for_each(|v| *v = StandardNormal.sample(&mut rng));
            let a = &mu_a + &la * &z;
            z.iter_mut().for_each(|v| *v = StandardNormal.sample(&mut rng));
            let b = &mu_b + &lb * &z;
            let w = a.component_mul(&b);
            acc.ger(1.0, &w, &w, 1.0);
        }
        acc /= samples as f64;
        worst = worst.max((&acc - &formula).norm() / formula.norm());
    }
    worst
}

/// `(worst bound excess over the log-likelihood, worst gap at x = ±ξ)` over
/// `draws` random tangent points and a 200-point grid on [-6, 6].
pub fn tangent_bound_check(draws: usize, seed: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut excess, mut touch): (f64, f64) = (f64::NEG_INFINITY, 0.0);
    for _ in 0..draws {
        let xi: f64 = rng.random_range(0.0..6.0);
        for y in [0.0, 1.0] {
            for k in 0..200 {
                let x = -6.0 + 12.0 * k as f64 / 199.0;
                excess = excess.max(tangent_lower_bound(y, x, xi) - bernoulli_loglik(y, x));
            }
            for x in [xi, -xi] {
                touch = touch.max((tangent_lower_bound(y, x, xi) - bernoulli_loglik(y, x)).abs());
            }
        }
    }
    (excess, touch)
}

/// A random piecewise-constant signal plus noise and a penalty up to 1.2·λ_max.
fn random_fused_problem(rng: &mut ChaCha8Rng, max_len: usize) -> (Vec<f64>, f64) {
    let len = rng.random_range(2..=max_len);
    let mut level: f64 = StandardNormal.sample(rng);
    let noise: f64 = rng.random_range(0.05..1.0);
    let y: Vec<f64> = (0..len)
        .map(|_| {
            if rng.random_bool(0.05) {
                let jump: f64 = StandardNormal.sample(rng);
                level += 2.0 * jump;
            }
            let e: f64 = StandardNormal.sample(rng);
            level + noise * e
        })
        .collect();
    let lambda = rng.random_range(0.0..1.2) * lambda_max(&y);
    (y, lambda)
}

/// Worst subgradient-KKT violation of the exact solver.
pub fn fused_kkt(instances: usize, max_len: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..instances {
        let (y, lambda) = random_fused_problem(&mut rng, max_len);
        let x = fused_lasso_1d(&y, lambda).unwrap();
        worst = worst.max(fused_kkt_violation(&y, &x, lambda, 1e-10));
    }
    worst
}

/// Worst objective gap of accelerated proximal gradient after `iters` steps.
pub fn fista_gap(instances: usize, max_len: usize, iters: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..instances {
        let (y, lambda) = random_fused_problem(&mut rng, max_len);
        let exact = fused_objective(&y, &fused_lasso_1d(&y, lambda).unwrap(), lambda);
        let (x, _) = l1_trendfilter_pg(&y, lambda, true, iters).unwrap();
        worst = worst.max(fused_objective(&y, &x, lambda) - exact);
    }
    worst
}

/// Worst gap between the Procrustes solution and an angle-grid search in 2-D.
/// Also fails (returns +inf) if the solver is beaten by the grid.
pub fn procrustes_vs_grid(instances: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..instances {
        let rows = rng.random_range(2..=12);
        let a = normal_matrix(&mut rng, rows, 2);
        let b = normal_matrix(&mut rng, rows, 2);
        let o = solve_procrustes(&a, &b).unwrap();
        let solved = (&a - &b * &o).norm();
        let grid = grid_min_objective(&a, &b, 1e-4);
        if solved > grid + 1e-12 {
            return f64::INFINITY;
        }
        worst = worst.max(grid - solved);
    }
    worst
}

/// Number of (estimate, truth) partition pairs of size `2..=max_n` on which
/// the library disagrees with enumeration, and the number of pairs checked.
pub fn partition_metrics_mismatches(max_n: usize) -> (usize, usize) {
    let (mut bad, mut total) = (0, 0);
    for n in 2..=max_n {
        let all = partitions(n, n);
        for est in &all {
            for truth in &all {
                total += 1;
                let ri = rand_index(est, truth).unwrap();
                let mis = misclustering_loss(est, truth, n).unwrap();
                if (ri - rand_index_pairs(est, truth)).abs() > 1e-12 || mis != misclustering_perms(est, truth, n) {
                    bad += 1;
                }
            }
        }
    }
    (bad, total)
}
