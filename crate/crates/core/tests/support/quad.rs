//! Numerical integration on a log-scale grid for positive scale variables.

use statrs::function::gamma::{digamma, ln_gamma};

/// Composite Simpson nodes and weights over `[lo, hi]` with `2m` intervals.
fn simpson(lo: f64, hi: f64, m: usize) -> (Vec<f64>, Vec<f64>) {
    let n = 2 * m;
    let h = (hi - lo) / n as f64;
    let nodes = (0..=n).map(|k| lo + h * k as f64).collect();
    let weights = (0..=n)
        .map(|k| {
            let c = if k == 0 || k == n { 1.0 } else if k % 2 == 1 { 4.0 } else { 2.0 };
            c * h / 3.0
        })
        .collect();
    (nodes, weights)
}

/// Log-scale Simpson rule fitted to where `log_density(x)` (unnormalized, in
/// `x`) carries mass. Returns `(u_k, w_k, log p(e^{u_k}) + u_k)` so that
/// `∫ g(x) p(x) dx ≈ Σ w_k g(e^{u_k}) exp(ℓ_k) / Z`.
pub struct LogGrid {
    pub u: Vec<f64>,
    pub w: Vec<f64>,
    pub log_mass: Vec<f64>,
}

impl LogGrid {
    pub fn new(log_density: impl Fn(f64) -> f64, points: usize) -> Self {
        Self::with_scan(log_density, 32000, points)
    }

    pub fn with_scan(log_density: impl Fn(f64) -> f64, scan_points: usize, points: usize) -> Self {
        // coarse scan to locate the mass
        let scan: Vec<(f64, f64)> = (0..=scan_points)
            .map(|k| {
                let u = -120.0 + 240.0 * k as f64 / scan_points as f64;
                (u, log_density(u.exp()) + u)
            })
            .collect();
        let top = scan.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
        let inside: Vec<f64> = scan.iter().filter(|p| p.1 > top - 60.0).map(|p| p.0).collect();
        let (lo, hi) = (inside[0] - 0.5, inside[inside.len() - 1] + 0.5);
        let (u, w) = simpson(lo, hi, points / 2);
        let log_mass = u.iter().map(|&v| log_density(v.exp()) + v).collect();
        LogGrid { u, w, log_mass }
    }

    /// Normalized expectation of `g`.
    pub fn expect(&self, g: impl Fn(f64) -> f64) -> f64 {
        let top = self.log_mass.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut num = 0.0;
        let mut den = 0.0;
        for ((u, w), l) in self.u.iter().zip(&self.w).zip(&self.log_mass) {
            let p = w * (l - top).exp();
            num += p * g(u.exp());
            den += p;
        }
        num / den
    }
}

pub fn ig_log_density(shape: f64, rate: f64, x: f64) -> f64 {
    shape * rate.ln() - ln_gamma(shape) - (shape + 1.0) * x.ln() - rate / x
}

/// `E[g(x)]` for `x ~ IG(shape, rate)` by quadrature.
pub fn ig_expect(shape: f64, rate: f64, g: impl Fn(f64) -> f64) -> f64 {
    LogGrid::new(|x| ig_log_density(shape, rate, x), 20000).expect(g)
}

/// The inverse gamma with the same `E[1/x]` and `E[log x]` as the density
/// `exp(log_density)`, found by quadrature. For a density that is exactly
/// inverse gamma this recovers its parameters.
pub fn fit_inverse_gamma(log_density: impl Fn(f64) -> f64) -> (f64, f64) {
    fit_inverse_gamma_on(&LogGrid::new(log_density, 40000))
}

pub fn fit_inverse_gamma_on(grid: &LogGrid) -> (f64, f64) {
    let e_inv = grid.expect(|x| 1.0 / x);
    let e_log = grid.expect(|x| x.ln());
    // E[log x] = log(shape/E[1/x]) - ψ(shape) ⇒ log(shape) - ψ(shape) = E[log x] + log E[1/x]
    let target = e_log + e_inv.ln();
    let (mut lo, mut hi) = (1e-6_f64, 1e8_f64);
    for _ in 0..300 {
        let mid = (lo * hi).sqrt();
        if mid.ln() - digamma(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let shape = (lo * hi).sqrt();
    (shape, shape / e_inv)
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}

impl LogGrid {
    /// `(x_k, p_k)` with `Σ p_k = 1`.
    pub fn atoms(&self) -> Vec<(f64, f64)> {
        let top = self.log_mass.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let raw: Vec<f64> = self.w.iter().zip(&self.log_mass).map(|(w, l)| w * (l - top).exp()).collect();
        let total: f64 = raw.iter().sum();
        self.u.iter().zip(raw).map(|(u, p)| (u.exp(), p / total)).collect()
    }
}
