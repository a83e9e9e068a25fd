//! Per-time low-rank baselines.

use nalgebra::DMatrix;

use crate::error::{FfsError, Result};
use crate::linalg::{sorted_svd, truncated_reconstruction};

/// Per-time mean estimates and the rank used at each time.
#[derive(Debug, Clone, PartialEq)]
pub struct LowRankEstimate {
    pub estimates: Vec<DMatrix<f64>>,
    pub ranks: Vec<usize>,
}

/// Truncated-SVD reconstruction of one slice at rank `d`.
pub fn svd_rank_d(y: &DMatrix<f64>, d: usize) -> Result<DMatrix<f64>> {
    let max_rank = y.nrows().min(y.ncols());
    if d > max_rank {
        return Err(FfsError::InvalidArgument(format!("rank {d} exceeds min dimension {max_rank}")));
    }
    Ok(truncated_reconstruction(y, d))
}

/// `ω(β) = 0.56β³ - 0.95β² + 1.82β + 1.43`, the unknown-noise hard-threshold
/// coefficient applied to the median singular value.
pub fn hard_threshold_coefficient(beta: f64) -> f64 {
    0.56 * beta.powi(3) - 0.95 * beta.powi(2) + 1.82 * beta + 1.43
}

/// Number of singular values above `ω(β)·median(σ)`.
pub fn optimal_hard_threshold_rank(y: &DMatrix<f64>) -> usize {
    let (m, n) = (y.nrows().min(y.ncols()), y.nrows().max(y.ncols()));
    if m == 0 {
        return 0;
    }
    let s = sorted_svd(y).singular_values;
    let mut sorted: Vec<f64> = s.iter().cloned().collect();
    sorted.sort_by(f64::total_cmp);
    let k = sorted.len();
    let median = if k % 2 == 1 { sorted[k / 2] } else { 0.5 * (sorted[k / 2 - 1] + sorted[k / 2]) };
    let threshold = hard_threshold_coefficient(m as f64 / n as f64) * median;
    s.iter().filter(|v| **v > threshold).count()
}

/// SVD1: rank-`d` reconstruction at every time point.
pub fn svd1(ys: &[DMatrix<f64>], d: usize) -> Result<LowRankEstimate> {
    let estimates = ys.iter().map(|y| svd_rank_d(y, d)).collect::<Result<Vec<_>>>()?;
    Ok(LowRankEstimate { ranks: vec![d; ys.len()], estimates })
}

/// SVD2 at time `t`: hard-threshold low-rank fit of `[Y_{t-1}, Y_t, Y_{t+1}]`,
/// returning the centre block and the rank used.
pub fn svd2_windowed(ys: &[DMatrix<f64>], t: usize) -> Result<(DMatrix<f64>, usize)> {
    let len = ys.len();
    if len < 2 {
        return Err(FfsError::InvalidArgument("windowed SVD needs T >= 2".into()));
    }
    if t >= len {
        return Err(FfsError::IndexOutOfRange { index: t, len });
    }
    let lo = t.saturating_sub(1);
    let hi = (t + 1).min(len - 1);
    let (rows, cols) = ys[t].shape();
    let blocks = hi - lo + 1;
    let mut stacked = DMatrix::zeros(rows, cols * blocks);
    for (b, s) in (lo..=hi).enumerate() {
        if ys[s].shape() != (rows, cols) {
            return Err(FfsError::DimensionMismatch(format!("slice {s} has shape {:?}", ys[s].shape())));
        }
        stacked.columns_mut(b * cols, cols).copy_from(&ys[s]);
    }
    let rank = optimal_hard_threshold_rank(&stacked);
    let fit = truncated_reconstruction(&stacked, rank);
    Ok((fit.columns((t - lo) * cols, cols).into_owned(), rank))
}

pub fn svd2(ys: &[DMatrix<f64>]) -> Result<LowRankEstimate> {
    let mut estimates = Vec::with_capacity(ys.len());
    let mut ranks = Vec::with_capacity(ys.len());
    for t in 0..ys.len() {
        let (e, r) = svd2_windowed(ys, t)?;
        estimates.push(e);
        ranks.push(r);
    }
    Ok(LowRankEstimate { estimates, ranks })
}
