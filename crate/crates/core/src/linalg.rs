//! Small dense helpers shared across modules.

use nalgebra::{DMatrix, DVector};

pub fn symmetrize(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}

/// Thin SVD with singular values sorted in decreasing order.
pub struct SortedSvd {
    pub u: DMatrix<f64>,
    pub singular_values: DVector<f64>,
    pub v_t: DMatrix<f64>,
}

pub fn sorted_svd(a: &DMatrix<f64>) -> SortedSvd {
    let (rows, cols) = a.shape();
    let k = rows.min(cols);
    if k == 0 {
        return SortedSvd { u: DMatrix::zeros(rows, 0), singular_values: DVector::zeros(0), v_t: DMatrix::zeros(0, cols) };
    }
    let m = faer::Mat::<f64>::from_fn(rows, cols, |i, j| a[(i, j)]);
    let svd = m.thin_svd().expect("SVD of a finite matrix");
    let (u, s, v) = (svd.U(), svd.S().column_vector(), svd.V());
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| s[j].total_cmp(&s[i]).then(i.cmp(&j)));
    SortedSvd {
        u: DMatrix::from_fn(rows, k, |r, c| u[(r, order[c])]),
        singular_values: DVector::from_fn(k, |i, _| s[order[i]]),
        v_t: DMatrix::from_fn(k, cols, |r, c| v[(c, order[r])]),
    }
}

/// Best rank-`k` approximation (Eckart–Young).
pub fn truncated_reconstruction(a: &DMatrix<f64>, k: usize) -> DMatrix<f64> {
    if k == 0 {
        return DMatrix::zeros(a.nrows(), a.ncols());
    }
    let svd = sorted_svd(a);
    let k = k.min(svd.singular_values.len());
    let mut out = DMatrix::zeros(a.nrows(), a.ncols());
    for l in 0..k {
        out += svd.u.column(l) * svd.v_t.row(l) * svd.singular_values[l];
    }
    out
}

/// Symmetric eigendecomposition sorted by decreasing eigenvalue.
pub fn sorted_symmetric_eigen(a: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let eig = symmetrize(a).symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]).then(i.cmp(&j)));
    let values = DVector::from_fn(order.len(), |i, _| eig.eigenvalues[order[i]]);
    let vectors = DMatrix::from_fn(a.nrows(), order.len(), |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Frobenius inner product `Σ_kl a_kl b_kl` of two equally shaped slices.
#[inline]
pub fn frobenius_dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
