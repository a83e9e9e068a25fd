//! Exhaustive enumeration over labelings, partitions and permutations.

use nalgebra::DMatrix;

/// Every labeling of `n` items with labels `< k` in restricted-growth form,
/// i.e. every partition into at most `k` blocks exactly once.
pub fn partitions(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, n: usize, k: usize, used: usize, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == n {
            out.push(prefix.clone());
            return;
        }
        for l in 0..(used + 1).min(k) {
            prefix.push(l);
            rec(prefix, n, k, used.max(l + 1), out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), n, k, 0, &mut out);
    out
}

pub fn permutations(k: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, k: usize, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == k {
            out.push(prefix.clone());
            return;
        }
        for v in 0..k {
            if !prefix.contains(&v) {
                prefix.push(v);
                rec(prefix, k, out);
                prefix.pop();
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), k, &mut out);
    out
}

/// Within-cluster sum of squares of a labeling with centroid centers.
pub fn partition_ss(u: &DMatrix<f64>, labels: &[usize], k: usize) -> f64 {
    let mut total = 0.0;
    for c in 0..k {
        let rows: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == c).collect();
        if rows.is_empty() {
            continue;
        }
        let mut center = u.row(rows[0]).clone_owned() * 0.0;
        for &i in &rows {
            center += u.row(i);
        }
        center /= rows.len() as f64;
        for &i in &rows {
            total += (u.row(i) - &center).norm_squared();
        }
    }
    total
}

/// Minimum SS over all partitions into exactly `k` nonempty blocks.
pub fn best_partition_ss(u: &DMatrix<f64>, k: usize) -> f64 {
    partitions(u.nrows(), k)
        .into_iter()
        .filter(|p| p.iter().max().map_or(0, |m| m + 1) == k)
        .map(|p| partition_ss(u, &p, k))
        .fold(f64::INFINITY, f64::min)
}

/// Rand index by listing every pair.
pub fn rand_index_pairs(a: &[usize], b: &[usize]) -> f64 {
    let n = a.len();
    let mut agree = 0usize;
    let mut total = 0usize;
    for i in 0..n {
        for j in i + 1..n {
            total += 1;
            if (a[i] == a[j]) == (b[i] == b[j]) {
                agree += 1;
            }
        }
    }
    agree as f64 / total as f64
}

/// Misclustering count by trying every relabeling of `est`.
pub fn misclustering_perms(est: &[usize], truth: &[usize], k: usize) -> usize {
    permutations(k)
        .iter()
        .map(|p| est.iter().zip(truth).filter(|(e, t)| p[**e] != **t).count())
        .min()
        .unwrap()
}
