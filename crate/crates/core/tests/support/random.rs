//! Random test instances.

use ffs::{GaussianChainPrior, SitePotential};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn normal_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

pub fn normal_vector(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| StandardNormal.sample(rng))
}

/// `GGᵀ` with `G` of `rank` Gaussian columns, so possibly singular.
pub fn random_psd(rng: &mut ChaCha8Rng, d: usize, rank: usize) -> DMatrix<f64> {
    let g = normal_matrix(rng, d, rank);
    &g * g.transpose()
}

pub fn random_spd(rng: &mut ChaCha8Rng, d: usize) -> DMatrix<f64> {
    random_psd(rng, d, d + 1) + DMatrix::identity(d, d) * 0.1
}

/// A chain problem with positive prior precisions and PSD sites.
pub fn random_chain(rng: &mut ChaCha8Rng, len: usize, d: usize) -> (GaussianChainPrior, Vec<SitePotential>) {
    let prior = GaussianChainPrior::new(
        d,
        rng.random_range(0.05..3.0),
        (0..len - 1).map(|_| rng.random_range(0.05..5.0)).collect(),
    )
    .unwrap();
    let sites = (0..len)
        .map(|_| {
            let rank = rng.random_range(0..=d);
            SitePotential { precision: random_psd(rng, d, rank), shift: normal_vector(rng, d) }
        })
        .collect();
    (prior, sites)
}

pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).abs().max()
}

/// Independent Gaussian factors `N(mean, cov)` for every mode, time and row.
pub struct RandomFactors {
    pub means: Vec<Vec<Vec<DVector<f64>>>>,
    pub covs: Vec<Vec<Vec<DMatrix<f64>>>>,
    chols: Vec<Vec<Vec<DMatrix<f64>>>>,
}

impl RandomFactors {
    pub fn new(rng: &mut ChaCha8Rng, sizes: &[usize], d: usize, len: usize, spread: f64) -> Self {
        let mut means = Vec::new();
        let mut covs = Vec::new();
        for &n in sizes {
            means.push((0..len).map(|_| (0..n).map(|_| normal_vector(rng, d)).collect()).collect());
            covs.push(
                (0..len)
                    .map(|_| (0..n).map(|_| random_psd(rng, d, d) * spread).collect())
                    .collect(),
            );
        }
        let chols = covs
            .iter()
            .map(|m: &Vec<Vec<DMatrix<f64>>>| {
                m.iter()
                    .map(|row| row.iter().map(|c| c.clone().cholesky().expect("full rank").l()).collect())
                    .collect()
            })
            .collect();
        RandomFactors { means, covs, chols }
    }

    pub fn moments(&self) -> Vec<ffs::likelihood::ModeMoments> {
        self.means
            .iter()
            .zip(&self.covs)
            .map(|(mm, cc)| {
                let (len, n, d) = (mm.len(), mm[0].len(), mm[0][0].len());
                let mut out = ffs::likelihood::ModeMoments::zeros(n, d, len);
                for t in 0..len {
                    for i in 0..n {
                        let m = &mm[t][i];
                        out.set(t, i, m, &(&cc[t][i] + m * m.transpose()));
                    }
                }
                out
            })
            .collect()
    }

    /// One joint draw, `[mode][t]` as `n × d` matrices.
    pub fn sample(&self, rng: &mut ChaCha8Rng) -> Vec<Vec<DMatrix<f64>>> {
        self.means
            .iter()
            .zip(&self.chols)
            .map(|(mm, cc)| {
                mm.iter()
                    .zip(cc)
                    .map(|(rows, covs)| {
                        let d = rows[0].len();
                        let mut f = DMatrix::zeros(rows.len(), d);
                        for (i, (m, l)) in rows.iter().zip(covs).enumerate() {
                            let x = m + l * normal_vector(rng, d);
                            f.set_row(i, &x.transpose());
                        }
                        f
                    })
                    .collect()
            })
            .collect()
    }
}

/// Random column-major slices of the given shape.
pub fn random_slices(rng: &mut ChaCha8Rng, dims: &[usize], len: usize) -> Vec<Vec<f64>> {
    let size: usize = dims.iter().product();
    (0..len).map(|_| (0..size).map(|_| StandardNormal.sample(rng)).collect()).collect()
}

/// Symmetric binary networks with empty diagonals.
pub fn random_networks(rng: &mut ChaCha8Rng, n: usize, len: usize) -> Vec<Vec<f64>> {
    (0..len)
        .map(|_| {
            let mut s = vec![0.0; n * n];
            for j in 0..n {
                for i in 0..j {
                    let v = if rng.random_bool(0.4) { 1.0 } else { 0.0 };
                    s[i + n * j] = v;
                    s[j + n * i] = v;
                }
            }
            s
        })
        .collect()
}
