//! One-dimensional fused lasso: exact dynamic programming, cross-validation,
//! and the proximal-gradient comparator.
//!
//! Objective: `½ Σ_t (y_t - x_t)² + λ Σ_t |x_{t+1} - x_t|`.

use nalgebra::DMatrix;

use crate::baselines::svd::{svd_rank_d, LowRankEstimate};
use crate::error::{FfsError, Result};

pub fn fused_objective(y: &[f64], x: &[f64], lambda: f64) -> f64 {
    let fit: f64 = y.iter().zip(x).map(|(a, b)| 0.5 * (a - b).powi(2)).sum();
    let tv: f64 = x.windows(2).map(|w| (w[1] - w[0]).abs()).sum();
    fit + lambda * tv
}

/// Smallest `λ` whose solution is the constant `mean(y)`.
pub fn lambda_max(y: &[f64]) -> f64 {
    if y.is_empty() {
        return 0.0;
    }
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let mut acc = 0.0;
    let mut best: f64 = 0.0;
    for v in &y[..y.len() - 1] {
        acc += v - mean;
        best = best.max(acc.abs());
    }
    best
}

/// Exact minimizer by the O(T) dynamic program that tracks the derivative of
/// the forward message as a piecewise-linear function and clips back-pointers.
pub fn fused_lasso_1d(y: &[f64], lambda: f64) -> Result<Vec<f64>> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(FfsError::InvalidArgument(format!("lambda must be finite and >= 0, got {lambda}")));
    }
    let n = y.len();
    match n {
        0 => return Ok(vec![]),
        1 => return Ok(vec![y[0]]),
        _ => {}
    }
    if lambda == 0.0 {
        return Ok(y.to_vec());
    }

    // knots x and derivative-increment coefficients (a, b) live in a 2n buffer
    let mut x = vec![0.0; 2 * n];
    let mut a = vec![0.0; 2 * n];
    let mut b = vec![0.0; 2 * n];
    let mut tm = vec![0.0; n - 1];
    let mut tp = vec![0.0; n - 1];

    tm[0] = -lambda + y[0];
    tp[0] = lambda + y[0];
    let mut l = n - 1;
    let mut r = n;
    x[l] = tm[0];
    x[r] = tp[0];
    a[l] = 1.0;
    b[l] = -y[0] + lambda;
    a[r] = -1.0;
    b[r] = y[0] + lambda;
    let mut afirst = 1.0;
    let mut bfirst = -y[1] - lambda;
    let mut alast = -1.0;
    let mut blast = y[1] - lambda;

    for k in 1..n - 1 {
        let mut lo = l;
        while lo <= r {
            if afirst * x[lo] + bfirst > -lambda {
                break;
            }
            afirst += a[lo];
            bfirst += b[lo];
            lo += 1;
        }
        let mut hi = r as isize;
        while hi >= lo as isize {
            let h = hi as usize;
            if -alast * x[h] - blast < lambda {
                break;
            }
            alast += a[h];
            blast += b[h];
            hi -= 1;
        }

        tm[k] = (-lambda - bfirst) / afirst;
        l = lo - 1;
        x[l] = tm[k];
        tp[k] = (lambda + blast) / (-alast);
        r = (hi + 1) as usize;
        x[r] = tp[k];

        a[l] = afirst;
        b[l] = bfirst + lambda;
        a[r] = alast;
        b[r] = blast + lambda;
        afirst = 1.0;
        bfirst = -y[k + 1] - lambda;
        alast = -1.0;
        blast = y[k + 1] - lambda;
    }

    let mut lo = l;
    while lo <= r {
        if afirst * x[lo] + bfirst > 0.0 {
            break;
        }
        afirst += a[lo];
        bfirst += b[lo];
        lo += 1;
    }
    let mut beta = vec![0.0; n];
    beta[n - 1] = -bfirst / afirst;
    for k in (0..n - 1).rev() {
        beta[k] = beta[k + 1].max(tm[k]).min(tp[k]);
    }
    Ok(beta)
}

/// Solution, selected penalty and cross-validation scores.
#[derive(Debug, Clone, PartialEq)]
pub struct FusedPath {
    pub solution: Vec<f64>,
    pub lambda: f64,
    pub lambda_grid: Vec<f64>,
    pub cv_scores: Vec<f64>,
}

/// Geometric grid of `size` penalties ending at `lambda_max(y)`.
pub fn default_lambda_grid(y: &[f64], size: usize) -> Vec<f64> {
    let top = lambda_max(y);
    if top == 0.0 || size == 0 {
        return vec![0.0];
    }
    if size == 1 {
        return vec![top];
    }
    let lo = top * 1e-3;
    (0..size)
        .map(|k| lo * (top / lo).powf(k as f64 / (size - 1) as f64))
        .collect()
}

/// Linear interpolation of fitted training values at held-out times; endpoints take the nearest value.
fn interpolate(train_t: &[usize], fitted: &[f64], t: usize) -> f64 {
    match train_t.binary_search(&t) {
        Ok(k) => fitted[k],
        Err(0) => fitted[0],
        Err(k) if k == train_t.len() => fitted[k - 1],
        Err(k) => {
            let (t0, t1) = (train_t[k - 1] as f64, train_t[k] as f64);
            let w = (t as f64 - t0) / (t1 - t0);
            (1.0 - w) * fitted[k - 1] + w * fitted[k]
        }
    }
}

/// K-fold (interleaved in time) cross-validation over `lambda_grid`, then a
/// refit on all data at the penalty with the smallest CV MSE (ties go to the
/// larger penalty).
pub fn cv_fused_lasso(y: &[f64], folds: usize, lambda_grid: &[f64]) -> Result<FusedPath> {
    if lambda_grid.is_empty() || lambda_grid.iter().any(|l| !(*l >= 0.0 && l.is_finite())) {
        return Err(FfsError::InvalidArgument("lambda grid must be nonempty, finite and >= 0".into()));
    }
    if folds < 2 || y.len() < folds {
        return Err(FfsError::InvalidArgument(format!("need T >= folds >= 2, got T={} folds={folds}", y.len())));
    }
    let mut scores = vec![0.0; lambda_grid.len()];
    for fold in 0..folds {
        let train_t: Vec<usize> = (0..y.len()).filter(|t| t % folds != fold).collect();
        let train_y: Vec<f64> = train_t.iter().map(|&t| y[t]).collect();
        for (g, &lambda) in lambda_grid.iter().enumerate() {
            let fitted = fused_lasso_1d(&train_y, lambda)?;
            scores[g] += (fold..y.len())
                .step_by(folds)
                .map(|t| (y[t] - interpolate(&train_t, &fitted, t)).powi(2))
                .sum::<f64>();
        }
    }
    for s in scores.iter_mut() {
        *s /= y.len() as f64;
    }
    let min = scores.iter().cloned().fold(f64::INFINITY, f64::min);
    let pick = (0..scores.len())
        .filter(|&g| scores[g] <= min)
        .max_by(|&a, &b| lambda_grid[a].total_cmp(&lambda_grid[b]))
        .expect("nonempty grid");
    let lambda = lambda_grid[pick];
    Ok(FusedPath { solution: fused_lasso_1d(y, lambda)?, lambda, lambda_grid: lambda_grid.to_vec(), cv_scores: scores })
}

/// Penalty grid used by the componentwise fused-lasso baselines.
#[derive(Debug, Clone, PartialEq)]
pub enum LambdaGrid {
    /// [`default_lambda_grid`] of the given size, per series.
    Auto(usize),
    Fixed(Vec<f64>),
}

fn series_grid(grid: &LambdaGrid, y: &[f64]) -> Vec<f64> {
    match grid {
        LambdaGrid::Auto(size) => default_lambda_grid(y, *size),
        LambdaGrid::Fixed(v) => v.clone(),
    }
}

/// Flasso1 on flat slices: cross-validated fused lasso for every entry series.
pub fn flasso1_slices(slices: &[Vec<f64>], folds: usize, grid: &LambdaGrid) -> Result<Vec<Vec<f64>>> {
    let len = slices.len();
    let size = slices.first().map_or(0, |s| s.len());
    let mut out = vec![vec![0.0; size]; len];
    let mut series = vec![0.0; len];
    for e in 0..size {
        for t in 0..len {
            series[t] = slices[t][e];
        }
        let path = cv_fused_lasso(&series, folds, &series_grid(grid, &series))?;
        for t in 0..len {
            out[t][e] = path.solution[t];
        }
    }
    Ok(out)
}

pub fn flasso1(ys: &[DMatrix<f64>], folds: usize, grid: &LambdaGrid) -> Result<Vec<DMatrix<f64>>> {
    let (rows, cols) = ys.first().map_or((0, 0), |y| y.shape());
    let slices: Vec<Vec<f64>> = ys.iter().map(|y| y.as_slice().to_vec()).collect();
    Ok(flasso1_slices(&slices, folds, grid)?
        .into_iter()
        .map(|s| DMatrix::from_vec(rows, cols, s))
        .collect())
}

/// Flasso2: Flasso1 followed by a rank-`d` truncation at every time.
pub fn flasso2(ys: &[DMatrix<f64>], d: usize, folds: usize, grid: &LambdaGrid) -> Result<LowRankEstimate> {
    let fused = flasso1(ys, folds, grid)?;
    let estimates = fused.iter().map(|f| svd_rank_d(f, d)).collect::<Result<Vec<_>>>()?;
    Ok(LowRankEstimate { ranks: vec![d; ys.len()], estimates })
}

/// `x = c·1 + Lδ`, `L` the cumulative-sum operator over the `T-1` differences.
fn synthesize(c: f64, delta: &[f64], x: &mut [f64]) {
    x[0] = c;
    for t in 1..x.len() {
        x[t] = x[t - 1] + delta[t - 1];
    }
}

/// Gradient of `½‖y - c·1 - Lδ‖²` with respect to `(c, δ)`.
fn gradient(y: &[f64], x: &[f64], grad_delta: &mut [f64]) -> f64 {
    let mut acc = 0.0;
    for t in (1..y.len()).rev() {
        acc += x[t] - y[t];
        grad_delta[t - 1] = acc;
    }
    acc + x[0] - y[0]
}

/// Largest eigenvalue of `[1 L]ᵀ[1 L]` by power iteration.
fn design_lipschitz(len: usize) -> f64 {
    let mut c = 1.0;
    let mut delta = vec![1.0; len - 1];
    let mut x = vec![0.0; len];
    let zeros = vec![0.0; len];
    let mut g = vec![0.0; len - 1];
    let mut est = 1.0;
    for _ in 0..500 {
        synthesize(c, &delta, &mut x);
        // Aᵀ A v = gradient at y = 0
        let gc = gradient(&zeros, &x, &mut g);
        let norm = (gc * gc + g.iter().map(|v| v * v).sum::<f64>()).sqrt();
        let prev_norm = (c * c + delta.iter().map(|v| v * v).sum::<f64>()).sqrt();
        est = norm / prev_norm;
        c = gc / norm;
        for (d, v) in delta.iter_mut().zip(&g) {
            *d = v / norm;
        }
    }
    est * (1.0 + 1e-9)
}

fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// ISTA (`accelerated = false`) or FISTA with adaptive restart on the
/// fused-lasso objective in the difference parametrization. Returns the final iterate and the objective
/// after every iteration.
pub fn l1_trendfilter_pg(y: &[f64], lambda: f64, accelerated: bool, iters: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(FfsError::InvalidArgument(format!("lambda must be finite and >= 0, got {lambda}")));
    }
    let n = y.len();
    if n <= 1 {
        return Ok((y.to_vec(), vec![0.0; iters]));
    }
    let step = 1.0 / design_lipschitz(n);
    // start from the total-fusion solution
    let (mut c, mut delta) = (y.iter().sum::<f64>() / n as f64, vec![0.0; n - 1]);
    let (mut zc, mut zdelta) = (c, delta.clone());
    let mut momentum: f64 = 1.0;
    let mut x = vec![0.0; n];
    let mut g = vec![0.0; n - 1];
    let mut trace = Vec::with_capacity(iters);
    for _ in 0..iters {
        synthesize(zc, &zdelta, &mut x);
        let gc = gradient(y, &x, &mut g);
        let new_c = zc - step * gc;
        let new_delta: Vec<f64> =
            zdelta.iter().zip(&g).map(|(d, gd)| soft_threshold(d - step * gd, step * lambda)).collect();
        if accelerated {
            // gradient-based adaptive restart
            let mut progress = (zc - new_c) * (new_c - c);
            for ((z, nd), d) in zdelta.iter().zip(&new_delta).zip(&delta) {
                progress += (z - nd) * (nd - d);
            }
            if progress > 0.0 {
                momentum = 1.0;
            }
            let next = 0.5 * (1.0 + (1.0 + 4.0 * momentum * momentum).sqrt());
            let w = (momentum - 1.0) / next;
            zc = new_c + w * (new_c - c);
            for ((z, nd), d) in zdelta.iter_mut().zip(&new_delta).zip(&delta) {
                *z = nd + w * (nd - d);
            }
            momentum = next;
        } else {
            zc = new_c;
            zdelta.clone_from(&new_delta);
        }
        c = new_c;
        delta = new_delta;
        synthesize(c, &delta, &mut x);
        trace.push(fused_objective(y, &x, lambda));
    }
    synthesize(c, &delta, &mut x);
    Ok((x, trace))
}
