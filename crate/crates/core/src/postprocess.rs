//! Procrustes alignment of latent trajectories and cluster extraction.

use std::collections::BTreeMap;
use std::ops::AddAssign;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{FfsError, Result};
use crate::linalg::sorted_svd;

/// Factor trajectory after sequential Procrustes alignment.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedTrajectory {
    /// `Û_t O_t`.
    pub factors: Vec<DMatrix<f64>>,
    /// `O_t`, with `O_1 = I`.
    pub rotations: Vec<DMatrix<f64>>,
}

/// Hard cluster assignment of `n` rows. Labels are zero-based.
#[derive(Debug, Clone, PartialEq)]
pub struct Membership {
    pub labels: Vec<usize>,
    pub centers: DMatrix<f64>,
}

impl Membership {
    pub fn k(&self) -> usize {
        self.centers.nrows()
    }
}

const RANK_TOL: f64 = 1e-12;

/// Orthogonal polar factor of a square matrix. On a rank-deficient input the
/// null space is completed with the orthogonal map closest to the identity.
fn polar_factor(m: &DMatrix<f64>) -> DMatrix<f64> {
    let d = m.nrows();
    let svd = sorted_svd(m);
    let scale = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    if scale == 0.0 {
        return DMatrix::identity(d, d);
    }
    let rank = svd.singular_values.iter().filter(|s| **s > RANK_TOL * scale.max(1.0)).count();
    let v = svd.v_t.transpose();
    let u_r = svd.u.columns(0, rank);
    let v_r = v.columns(0, rank);
    let mut o = &u_r * v_r.transpose();
    if rank < d {
        let u_n = svd.u.columns(rank, d - rank).into_owned();
        let v_n = v.columns(rank, d - rank).into_owned();
        // maximize tr(U_n Q V_nᵀ) = tr(Q V_nᵀ U_n) over orthogonal Q
        let x = v_n.transpose() * &u_n;
        let inner = sorted_svd(&x);
        let q = inner.v_t.transpose() * inner.u.transpose();
        o += &u_n * q * v_n.transpose();
    }
    o
}

/// `argmin_O ‖A - B O‖_F` over orthogonal `O` (rotations and reflections).
pub fn solve_procrustes(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if a.shape() != b.shape() {
        return Err(FfsError::DimensionMismatch(format!("{:?} vs {:?}", a.shape(), b.shape())));
    }
    Ok(polar_factor(&(b.transpose() * a)))
}

/// Rotates each `Û_t` onto the previously aligned `Û_{t-1} O_{t-1}`.
pub fn sequential_align(factors: &[DMatrix<f64>]) -> Result<AlignedTrajectory> {
    let Some(first) = factors.first() else {
        return Ok(AlignedTrajectory { factors: vec![], rotations: vec![] });
    };
    let d = first.ncols();
    let mut aligned = vec![first.clone()];
    let mut rotations = vec![DMatrix::identity(d, d)];
    for u in &factors[1..] {
        if u.shape() != first.shape() {
            return Err(FfsError::DimensionMismatch(format!("{:?} vs {:?}", u.shape(), first.shape())));
        }
        let o = solve_procrustes(aligned.last().expect("nonempty"), u)?;
        aligned.push(u * &o);
        rotations.push(o);
    }
    Ok(AlignedTrajectory { factors: aligned, rotations })
}

/// Window loss `inf_O Σ_k ‖Û_k - U*_k O‖²_F` with one orthogonal `O` shared by the window.
pub fn window_loss(estimates: &[DMatrix<f64>], truth: &[DMatrix<f64>]) -> Result<f64> {
    if estimates.len() != truth.len() || estimates.is_empty() {
        return Err(FfsError::DimensionMismatch("window lengths differ or are empty".into()));
    }
    let d = truth[0].ncols();
    let mut cross = DMatrix::zeros(d, d);
    for (e, s) in estimates.iter().zip(truth) {
        if e.shape() != s.shape() {
            return Err(FfsError::DimensionMismatch(format!("{:?} vs {:?}", e.shape(), s.shape())));
        }
        cross += s.transpose() * e;
    }
    let o = polar_factor(&cross);
    Ok(estimates.iter().zip(truth).map(|(e, s)| (e - s * &o).norm_squared()).sum())
}

/// Scales every nonzero row to unit length.
pub fn row_normalize(u: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = u.clone();
    for mut row in out.row_iter_mut() {
        let norm = row.norm();
        if norm > 0.0 {
            row /= norm;
        }
    }
    out
}

/// Lloyd iteration caps.
#[derive(Debug, Clone, Copy)]
pub struct KMeansOptions {
    pub restarts: usize,
    pub max_iter: usize,
    pub rel_tol: f64,
}

impl Default for KMeansOptions {
    fn default() -> Self {
        Self { restarts: 10, max_iter: 100, rel_tol: 1e-8 }
    }
}

fn sq_dist(u: &DMatrix<f64>, i: usize, centers: &DMatrix<f64>, k: usize) -> f64 {
    (0..u.ncols()).map(|c| (u[(i, c)] - centers[(k, c)]).powi(2)).sum()
}

/// Within-cluster sum of squares.
pub fn within_ss(u: &DMatrix<f64>, m: &Membership) -> f64 {
    (0..u.nrows()).map(|i| sq_dist(u, i, &m.centers, m.labels[i])).sum()
}

fn kmeans_pp(u: &DMatrix<f64>, k: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let n = u.nrows();
    let mut centers = DMatrix::zeros(k, u.ncols());
    let first = rng.random_range(0..n);
    centers.row_mut(0).copy_from(&u.row(first));
    let mut dist: Vec<f64> = (0..n).map(|i| sq_dist(u, i, &centers, 0)).collect();
    for c in 1..k {
        let total: f64 = dist.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, w) in dist.iter().enumerate() {
                if target < *w {
                    chosen = i;
                    break;
                }
                target -= w;
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        centers.row_mut(c).copy_from(&u.row(pick));
        for (i, d) in dist.iter_mut().enumerate() {
            *d = d.min(sq_dist(u, i, &centers, c));
        }
    }
    centers
}

fn lloyd(u: &DMatrix<f64>, mut centers: DMatrix<f64>, opts: &KMeansOptions) -> Membership {
    let (n, k) = (u.nrows(), centers.nrows());
    let mut labels = vec![0usize; n];
    let mut prev_ss = f64::INFINITY;
    for _ in 0..opts.max_iter.max(1) {
        let mut ss = 0.0;
        for (i, label) in labels.iter_mut().enumerate() {
            let (best, dist) = (0..k)
                .map(|c| (c, sq_dist(u, i, &centers, c)))
                .fold((0, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
            *label = best;
            ss += dist;
        }
        // reseed empty clusters with the worst-fit point
        for c in 0..k {
            if !labels.contains(&c) {
                let (far, _) = (0..n)
                    .map(|i| (i, sq_dist(u, i, &centers, labels[i])))
                    .filter(|(i, _)| labels.iter().filter(|l| **l == labels[*i]).count() > 1)
                    .fold((usize::MAX, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
                if far != usize::MAX {
                    labels[far] = c;
                    centers.row_mut(c).copy_from(&u.row(far));
                }
            }
        }
        let mut sums = DMatrix::zeros(k, u.ncols());
        let mut counts = vec![0usize; k];
        for (i, &l) in labels.iter().enumerate() {
            sums.row_mut(l).add_assign(&u.row(i));
            counts[l] += 1;
        }
        for c in 0..k {
            if counts[c] > 0 {
                let row = sums.row(c) / counts[c] as f64;
                centers.row_mut(c).copy_from(&row);
            }
        }
        if (prev_ss - ss).abs() <= opts.rel_tol * ss.max(f64::MIN_POSITIVE) {
            break;
        }
        prev_ss = ss;
    }
    Membership { labels, centers }
}

/// K-means on the rows of `u`: k-means++ seeding, Lloyd iterations, best of `restarts`.
pub fn kmeans_rows(u: &DMatrix<f64>, k: usize, restarts: usize, seed: u64) -> Result<Membership> {
    kmeans_rows_with(u, k, seed, &KMeansOptions { restarts, ..KMeansOptions::default() })
}

pub fn kmeans_rows_with(u: &DMatrix<f64>, k: usize, seed: u64, opts: &KMeansOptions) -> Result<Membership> {
    let n = u.nrows();
    if k == 0 || k > n {
        return Err(FfsError::InvalidArgument(format!("K = {k} must be in 1..={n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(f64, Membership)> = None;
    for _ in 0..opts.restarts.max(1) {
        let start = kmeans_pp(u, k, &mut rng);
        let m = lloyd(u, start, opts);
        let ss = within_ss(u, &m);
        if best.as_ref().is_none_or(|(b, _)| ss < *b) {
            best = Some((ss, m));
        }
    }
    Ok(best.expect("at least one restart").1)
}

/// Minimum-cost assignment on a square cost matrix (Hungarian method).
fn hungarian(cost: &[Vec<i64>]) -> Vec<usize> {
    let n = cost.len();
    let inf = i64::MAX / 4;
    let mut u = vec![0i64; n + 1];
    let mut v = vec![0i64; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0usize; n];
    for j in 1..=n {
        if p[j] > 0 {
            assignment[p[j] - 1] = j - 1;
        }
    }
    assignment
}

/// Number of rows whose label disagrees under the best relabeling of `est`.
pub fn misclustering_loss(est: &[usize], truth: &[usize], k: usize) -> Result<usize> {
    if est.len() != truth.len() {
        return Err(FfsError::DimensionMismatch(format!("{} vs {} labels", est.len(), truth.len())));
    }
    if est.iter().chain(truth).any(|&l| l >= k) {
        return Err(FfsError::InvalidArgument(format!("labels must lie in 0..{k}")));
    }
    let mut agree = vec![vec![0i64; k]; k];
    for (&a, &b) in est.iter().zip(truth) {
        agree[a][b] += 1;
    }
    let cost: Vec<Vec<i64>> = agree.iter().map(|row| row.iter().map(|c| -c).collect()).collect();
    let perm = hungarian(&cost);
    let matched: i64 = perm.iter().enumerate().map(|(a, &b)| agree[a][b]).sum();
    Ok(est.len() - matched as usize)
}

/// Fraction of pairs on which two partitions agree, from the contingency table.
pub fn rand_index(a: &[usize], b: &[usize]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(FfsError::DimensionMismatch(format!("{} vs {} labels", a.len(), b.len())));
    }
    let n = a.len();
    if n < 2 {
        return Err(FfsError::InvalidArgument("rand index needs at least two items".into()));
    }
    let pairs = |c: usize| (c * c.saturating_sub(1) / 2) as f64;
    let mut joint: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut left: BTreeMap<usize, usize> = BTreeMap::new();
    let mut right: BTreeMap<usize, usize> = BTreeMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *joint.entry((x, y)).or_default() += 1;
        *left.entry(x).or_default() += 1;
        *right.entry(y).or_default() += 1;
    }
    let both: f64 = joint.values().map(|&c| pairs(c)).sum();
    let same_a: f64 = left.values().map(|&c| pairs(c)).sum();
    let same_b: f64 = right.values().map(|&c| pairs(c)).sum();
    let total = pairs(n);
    Ok((total + 2.0 * both - same_a - same_b) / total)
}
