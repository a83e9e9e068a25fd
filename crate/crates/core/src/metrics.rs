//! Evaluation measures.

use nalgebra::DMatrix;

use crate::error::{FfsError, Result};
use crate::postprocess::AlignedTrajectory;

fn check_shapes(a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<()> {
    if a.len() != b.len() || a.iter().zip(b).any(|(x, y)| x.len() != y.len()) {
        return Err(FfsError::DimensionMismatch("estimate and truth shapes differ".into()));
    }
    Ok(())
}

/// Root mean squared entrywise error over all entries and times.
pub fn rmse(est: &[Vec<f64>], truth: &[Vec<f64>]) -> Result<f64> {
    check_shapes(est, truth)?;
    let count: usize = est.iter().map(Vec::len).sum();
    if count == 0 {
        return Err(FfsError::UndefinedMetric("rmse of empty arrays".into()));
    }
    let sse: f64 = est.iter().flatten().zip(truth.iter().flatten()).map(|(a, b)| (a - b).powi(2)).sum();
    Ok((sse / count as f64).sqrt())
}

/// Pearson correlation of two equal-length samples.
pub fn pcc(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(FfsError::DimensionMismatch(format!("lengths {} and {}", a.len(), b.len())));
    }
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma).powi(2);
        sbb += (y - mb).powi(2);
    }
    if !(saa > 0.0 && sbb > 0.0) {
        return Err(FfsError::UndefinedMetric("zero variance in correlation".into()));
    }
    Ok(sab / (saa * sbb).sqrt())
}

/// Strict upper-triangle entries (`i < j`) of every `n × n` column-major slice, in time order.
pub fn upper_triangle_entries(slices: &[Vec<f64>], n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(slices.len() * n * n.saturating_sub(1) / 2);
    for s in slices {
        for j in 0..n {
            for i in 0..j {
                out.push(s[i + n * j]);
            }
        }
    }
    out
}

/// Correlation between estimated and true edge probabilities over all dyads and times.
pub fn network_pcc(est: &[Vec<f64>], truth: &[Vec<f64>], n: usize) -> Result<f64> {
    check_shapes(est, truth)?;
    pcc(&upper_triangle_entries(est, n), &upper_triangle_entries(truth, n))
}

/// Area under the ROC curve by the Mann–Whitney statistic with midranks for ties.
pub fn auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(FfsError::DimensionMismatch(format!("{} scores, {} labels", scores.len(), labels.len())));
    }
    let positives = labels.iter().filter(|l| **l).count();
    let negatives = labels.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(FfsError::UndefinedMetric("AUC needs both classes".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum = 0.0;
    let mut k = 0;
    while k < order.len() {
        let mut end = k + 1;
        while end < order.len() && scores[order[end]] == scores[order[k]] {
            end += 1;
        }
        let midrank = 0.5 * ((k + 1) + end) as f64;
        rank_sum += midrank * order[k..end].iter().filter(|&&i| labels[i]).count() as f64;
        k = end;
    }
    let p = positives as f64;
    Ok((rank_sum - p * (p + 1.0) / 2.0) / (p * negatives as f64))
}

/// `d(t₁,t₂) = ‖P_{t₁} − P_{t₂}‖²_F / (‖P_{t₁}‖_F ‖P_{t₂}‖_F)` over one carrier's slices.
pub fn discrepancy_matrix(slices: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let norms: Vec<f64> = slices.iter().map(|s| s.iter().map(|v| v * v).sum::<f64>().sqrt()).collect();
    if let Some(t) = norms.iter().position(|n| *n == 0.0) {
        return Err(FfsError::UndefinedMetric(format!("slice {t} has zero norm")));
    }
    if slices.iter().any(|s| s.len() != slices[0].len()) {
        return Err(FfsError::DimensionMismatch("slices differ in size".into()));
    }
    let len = slices.len();
    let mut out = DMatrix::zeros(len, len);
    for a in 0..len {
        for b in a + 1..len {
            let sq: f64 = slices[a].iter().zip(&slices[b]).map(|(x, y)| (x - y).powi(2)).sum();
            let v = sq / (norms[a] * norms[b]);
            out[(a, b)] = v;
            out[(b, a)] = v;
        }
    }
    Ok(out)
}

/// Divides every carrier's matrix by the largest entry over all carriers.
pub fn normalize_discrepancies(mats: &mut [DMatrix<f64>]) {
    let top = mats.iter().map(|m| m.max()).fold(0.0, f64::max);
    if top > 0.0 {
        for m in mats.iter_mut() {
            *m /= top;
        }
    }
}

/// Entry `(i, t)` is `‖u_{i,t+1} − u_{i,t}‖₂` on the aligned factors.
pub fn transition_norm_heatmap(aligned: &AlignedTrajectory) -> DMatrix<f64> {
    let f = &aligned.factors;
    let n = f.first().map_or(0, |u| u.nrows());
    let steps = f.len().saturating_sub(1);
    DMatrix::from_fn(n, steps, |i, t| (f[t + 1].row(i) - f[t].row(i)).norm())
}

/// Subject indices ordered by total transition norm, largest first (ties by index).
pub fn rank_subjects_by_movement(heatmap: &DMatrix<f64>) -> Vec<usize> {
    let sums: Vec<f64> = heatmap.row_iter().map(|r| r.sum()).collect();
    let mut order: Vec<usize> = (0..sums.len()).collect();
    order.sort_by(|&a, &b| sums[b].total_cmp(&sums[a]).then(a.cmp(&b)));
    order
}
