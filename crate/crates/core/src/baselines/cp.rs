//! Static CP decomposition by alternating least squares.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{FfsError, Result};

const JITTER: f64 = 1e-8;

/// Factor matrices (one `n_m × d` per mode) and the residual Frobenius norm
/// after every single-mode update.
#[derive(Debug, Clone, PartialEq)]
pub struct CpFit {
    pub factors: Vec<DMatrix<f64>>,
    pub residual_trace: Vec<f64>,
}

/// `Σ_l a⁽¹⁾_l ⊗ … ⊗ a⁽ᴹ⁾_l`, flattened column-major.
pub fn cp_reconstruct(factors: &[DMatrix<f64>]) -> Vec<f64> {
    let dims: Vec<usize> = factors.iter().map(|f| f.nrows()).collect();
    let size: usize = dims.iter().product();
    let d = factors.first().map_or(0, |f| f.ncols());
    let mut out = vec![0.0; size];
    let mut idx = vec![0usize; dims.len()];
    for v in out.iter_mut() {
        let mut acc = 0.0;
        for l in 0..d {
            acc += factors.iter().zip(&idx).map(|(f, &i)| f[(i, l)]).product::<f64>();
        }
        *v = acc;
        advance(&mut idx, &dims);
    }
    out
}

fn advance(idx: &mut [usize], dims: &[usize]) {
    for (i, &n) in idx.iter_mut().zip(dims) {
        *i += 1;
        if *i < n {
            return;
        }
        *i = 0;
    }
}

fn residual(x: &[f64], factors: &[DMatrix<f64>]) -> f64 {
    x.iter().zip(cp_reconstruct(factors)).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt()
}

/// Rank-`d` CP fit of one tensor slice stored column-major with mode sizes `dims`.
pub fn cp_als(x: &[f64], dims: &[usize], d: usize, iters: usize, seed: u64) -> Result<CpFit> {
    if dims.len() < 2 {
        return Err(FfsError::DimensionMismatch("CP needs at least two modes".into()));
    }
    if x.len() != dims.iter().product::<usize>() {
        return Err(FfsError::DimensionMismatch(format!("tensor has {} entries, dims {dims:?}", x.len())));
    }
    if d == 0 {
        return Err(FfsError::InvalidArgument("rank must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut factors: Vec<DMatrix<f64>> = dims
        .iter()
        .map(|&n| DMatrix::from_fn(n, d, |_, _| StandardNormal.sample(&mut rng)))
        .collect();
    let mut trace = Vec::with_capacity(iters * dims.len());
    for _ in 0..iters {
        for m in 0..dims.len() {
            let mut gram = DMatrix::from_element(d, d, 1.0);
            for (k, f) in factors.iter().enumerate() {
                if k != m {
                    gram.component_mul_assign(&(f.transpose() * f));
                }
            }
            let mut mttkrp = DMatrix::zeros(dims[m], d);
            let mut idx = vec![0usize; dims.len()];
            for &v in x {
                for l in 0..d {
                    let w: f64 = factors
                        .iter()
                        .enumerate()
                        .filter(|(k, _)| *k != m)
                        .map(|(k, f)| f[(idx[k], l)])
                        .product();
                    mttkrp[(idx[m], l)] += v * w;
                }
                advance(&mut idx, dims);
            }
            let chol = gram.clone().cholesky().or_else(|| {
                let scale = gram.diagonal().amax().max(1.0);
                (gram + DMatrix::identity(d, d) * (JITTER * scale)).cholesky()
            });
            let chol = chol.ok_or_else(|| FfsError::NumericalFailure {
                cycle: trace.len(),
                what: "CP normal equations".into(),
            })?;
            // A = M G⁻¹, G symmetric
            factors[m] = chol.solve(&mttkrp.transpose()).transpose();
            trace.push(residual(x, &factors));
        }
    }
    Ok(CpFit { factors, residual_trace: trace })
}
