//! Synthetic dynamic matrices, networks and tensors with sparse factor jumps.
//!
//! Every generator draws from `ChaCha8Rng::seed_from_u64(seed)` in a fixed
//! order, so a seed pins the dataset bit for bit on every platform.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::baselines::cp_reconstruct;
use crate::data::{ObservationKind, ObservationSet};
use crate::error::{FfsError, Result};
use crate::likelihood::logistic;

/// Generated observations together with the truth that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticDataset {
    pub observations: ObservationSet,
    /// `truth_factors[mode][t]` is `n_mode × d`.
    pub truth_factors: Vec<Vec<DMatrix<f64>>>,
    /// Mean array per time in the observation layout. For networks this is
    /// the linear predictor, intercept included.
    pub truth_means: Vec<Vec<f64>>,
    pub truth_intercept: f64,
    /// `truth_labels[t][i]`, 0-based, for the clustering regimes.
    pub truth_labels: Option<Vec<Vec<usize>>>,
    pub seed: u64,
}

impl SyntheticDataset {
    /// Edge probabilities (networks) or means (Gaussian kinds) per time.
    pub fn truth_response(&self) -> Vec<Vec<f64>> {
        match self.observations.kind {
            ObservationKind::BernoulliNetwork => {
                self.truth_means.iter().map(|s| s.iter().map(|&x| logistic(x)).collect()).collect()
            }
            _ => self.truth_means.clone(),
        }
    }
}

fn check_prob(name: &str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(FfsError::InvalidArgument(format!("{name} must lie in [0, 1], got {p}")))
    }
}

fn check_sizes(sizes: &[usize], len: usize) -> Result<()> {
    if len == 0 || sizes.contains(&0) {
        return Err(FfsError::InvalidArgument(format!("sizes {sizes:?} and T={len} must be positive")));
    }
    Ok(())
}

/// Random walk with jumps `0` w.p. `rho`, else `±step·1` with equal odds.
fn fused_walk(rng: &mut ChaCha8Rng, init: DMatrix<f64>, len: usize, rho: f64, step: f64) -> Vec<DMatrix<f64>> {
    let mut path = Vec::with_capacity(len);
    path.push(init);
    for t in 1..len {
        let mut next = path[t - 1].clone();
        for mut row in next.row_iter_mut() {
            let u: f64 = rng.random();
            if u >= rho {
                let sign = if u < rho + 0.5 * (1.0 - rho) { -1.0 } else { 1.0 };
                row.add_scalar_mut(sign * step);
            }
        }
        path.push(next);
    }
    path
}

fn standard_normal_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

fn symmetric_bernoulli(rng: &mut ChaCha8Rng, eta: &[f64], n: usize) -> Vec<f64> {
    let mut y = vec![0.0; n * n];
    for j in 0..n {
        for i in 0..j {
            let edge = if rng.random::<f64>() < logistic(eta[i + n * j]) { 1.0 } else { 0.0 };
            y[i + n * j] = edge;
            y[j + n * i] = edge;
        }
    }
    y
}

fn gram(u: &DMatrix<f64>, intercept: f64) -> Vec<f64> {
    (u * u.transpose()).add_scalar(intercept).as_slice().to_vec()
}

/// Case 1: Gaussian dynamic matrix with `±1` vector jumps in both factor modes.
pub fn gen_case1(n: usize, p: usize, len: usize, d: usize, rho: f64, sigma: f64, seed: u64) -> Result<SyntheticDataset> {
    check_prob("rho", rho)?;
    check_sizes(&[n, p, d], len)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u0 = standard_normal_matrix(&mut rng, n, d);
    let v0 = standard_normal_matrix(&mut rng, p, d);
    let us = fused_walk(&mut rng, u0, len, rho, 1.0);
    let vs = fused_walk(&mut rng, v0, len, rho, 1.0);
    let noise = Normal::new(0.0, sigma).map_err(|e| FfsError::InvalidArgument(e.to_string()))?;
    let mut means = Vec::with_capacity(len);
    let mut slices = Vec::with_capacity(len);
    for (u, v) in us.iter().zip(&vs) {
        let m = u * v.transpose();
        slices.push(m.iter().map(|x| x + noise.sample(&mut rng)).collect());
        means.push(m.as_slice().to_vec());
    }
    Ok(SyntheticDataset {
        observations: ObservationSet::new(ObservationKind::GaussianMatrix, vec![n, p], slices, None)?,
        truth_factors: vec![us, vs],
        truth_means: means,
        truth_intercept: 0.0,
        truth_labels: None,
        seed,
    })
}

/// Case 2: symmetric logistic network, latent dimension 2, initial positions
/// from `½N((1,0),I) + ½N((-1,0),I)`, jumps `±(0.25, 0.25)`.
pub fn gen_case2_network(n: usize, len: usize, rho: f64, seed: u64) -> Result<SyntheticDataset> {
    check_prob("rho", rho)?;
    check_sizes(&[n], len)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut u0 = standard_normal_matrix(&mut rng, n, 2);
    for i in 0..n {
        u0[(i, 0)] += if rng.random::<bool>() { 1.0 } else { -1.0 };
    }
    let us = fused_walk(&mut rng, u0, len, rho, 0.25);
    network_dataset(&mut rng, us, 0.0, None, seed)
}

fn network_dataset(
    rng: &mut ChaCha8Rng,
    us: Vec<DMatrix<f64>>,
    intercept: f64,
    labels: Option<Vec<Vec<usize>>>,
    seed: u64,
) -> Result<SyntheticDataset> {
    let n = us[0].nrows();
    let means: Vec<Vec<f64>> = us.iter().map(|u| gram(u, intercept)).collect();
    let slices = means.iter().map(|eta| symmetric_bernoulli(rng, eta, n)).collect();
    Ok(SyntheticDataset {
        observations: ObservationSet::new(ObservationKind::BernoulliNetwork, vec![n, n], slices, None)?,
        truth_factors: vec![us],
        truth_means: means,
        truth_intercept: intercept,
        truth_labels: labels,
        seed,
    })
}

/// Case 3: Gaussian CP tensor of rank 2 with `±(0.25, 0.25)` jumps.
pub fn gen_case3_tensor(
    n1: usize,
    n2: usize,
    n3: usize,
    len: usize,
    rho: f64,
    sigma: f64,
    seed: u64,
) -> Result<SyntheticDataset> {
    check_prob("rho", rho)?;
    check_sizes(&[n1, n2, n3], len)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, sigma).map_err(|e| FfsError::InvalidArgument(e.to_string()))?;
    let dims = [n1, n2, n3];
    let inits: Vec<DMatrix<f64>> = dims.iter().map(|&n| standard_normal_matrix(&mut rng, n, 2)).collect();
    let factors: Vec<Vec<DMatrix<f64>>> =
        inits.into_iter().map(|init| fused_walk(&mut rng, init, len, rho, 0.25)).collect();
    let mut means = Vec::with_capacity(len);
    let mut slices = Vec::with_capacity(len);
    for t in 0..len {
        let at_t: Vec<DMatrix<f64>> = factors.iter().map(|f| f[t].clone()).collect();
        let m = cp_reconstruct(&at_t);
        slices.push(m.iter().map(|x| x + noise.sample(&mut rng)).collect());
        means.push(m);
    }
    Ok(SyntheticDataset {
        observations: ObservationSet::new(ObservationKind::GaussianTensor, dims.to_vec(), slices, None)?,
        truth_factors: factors,
        truth_means: means,
        truth_intercept: 0.0,
        truth_labels: None,
        seed,
    })
}

/// The four cluster corners `{-s, s}²`, indexed `(-,-), (-,+), (+,-), (+,+)`.
pub fn corners(s: f64) -> [[f64; 2]; 4] {
    [[-s, -s], [-s, s], [s, -s], [s, s]]
}

/// Corner-label paths: each subject starts uniformly at a corner; a moving
/// subject stays with probability `p_stay`, else jumps uniformly to one of
/// the other three corners.
fn corner_labels(rng: &mut ChaCha8Rng, n: usize, len: usize, p_stay: f64, movers: usize) -> Vec<Vec<usize>> {
    let mut labels = vec![(0..n).map(|_| rng.random_range(0..4)).collect::<Vec<usize>>()];
    for t in 1..len {
        let mut next = labels[t - 1].clone();
        for l in next.iter_mut().take(movers) {
            if rng.random::<f64>() >= p_stay {
                *l = (*l + rng.random_range(1..4)) % 4;
            }
        }
        labels.push(next);
    }
    labels
}

fn corner_factors(labels: &[Vec<usize>], s: f64) -> Vec<DMatrix<f64>> {
    let c = corners(s);
    labels
        .iter()
        .map(|lt| DMatrix::from_fn(lt.len(), 2, |i, k| c[lt[i]][k]))
        .collect()
}

/// Clustering regime: positions on `{-2, 2}²`, link `logistic(-2 + uᵀu)`.
pub fn gen_cluster_case(n: usize, len: usize, p_stay: f64, seed: u64) -> Result<SyntheticDataset> {
    check_prob("p_stay", p_stay)?;
    check_sizes(&[n], len)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let labels = corner_labels(&mut rng, n, len, p_stay, n);
    let us = corner_factors(&labels, 2.0);
    network_dataset(&mut rng, us, -2.0, Some(labels), seed)
}

/// Probability that a moving subject leaves its corner at each step of [`gen_two_movers`].
pub const TWO_MOVER_RATE: f64 = 0.05;

/// Two-mover regime: positions on `{-1, 1}²`, only subjects 0 and 1 move,
/// link `logistic(2uᵀu)`. Stored factors are scaled by `√2` so that their
/// inner products equal the linear predictor.
pub fn gen_two_movers(n: usize, len: usize, seed: u64) -> Result<SyntheticDataset> {
    if n < 2 {
        return Err(FfsError::InvalidArgument(format!("two movers need n >= 2, got {n}")));
    }
    check_sizes(&[n], len)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let labels = corner_labels(&mut rng, n, len, 1.0 - TWO_MOVER_RATE, 2);
    let us = corner_factors(&labels, std::f64::consts::SQRT_2);
    network_dataset(&mut rng, us, 0.0, Some(labels), seed)
}
