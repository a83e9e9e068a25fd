//! Subgradient optimality check for `½‖y - x‖² + λ Σ|x_{t+1} - x_t|`.

/// Largest violation of the stationarity conditions. With
/// `z_t = Σ_{s≤t} (x_s - y_s)` for `t < T-1`, optimality requires
/// `Σ (y - x) = 0`, `|z_t| ≤ λ`, and `z_t = λ·sign(x_{t+1} - x_t)` wherever the
/// difference is nonzero.
pub fn fused_kkt_violation(y: &[f64], x: &[f64], lambda: f64, fuse_tol: f64) -> f64 {
    let n = y.len();
    let mut worst: f64 = 0.0;
    let mut z = 0.0;
    for t in 0..n.saturating_sub(1) {
        z += x[t] - y[t];
        let diff = x[t + 1] - x[t];
        if diff.abs() > fuse_tol {
            worst = worst.max((z - lambda * diff.signum()).abs());
        } else {
            worst = worst.max(z.abs() - lambda);
        }
    }
    z += x[n - 1] - y[n - 1];
    worst.max(z.abs())
}
