//! Brute-force orthogonal Procrustes in two dimensions.

use nalgebra::DMatrix;

pub fn rotation(theta: f64) -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[theta.cos(), -theta.sin(), theta.sin(), theta.cos()])
}

pub fn reflection(theta: f64) -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[theta.cos(), theta.sin(), theta.sin(), -theta.cos()])
}

/// `min ‖A - B·O‖_F` over rotations and reflections on an angle grid of spacing `step`.
pub fn grid_min_objective(a: &DMatrix<f64>, b: &DMatrix<f64>, step: f64) -> f64 {
    let n = (2.0 * std::f64::consts::PI / step).ceil() as usize;
    let mut best = f64::INFINITY;
    for k in 0..n {
        let theta = k as f64 * step;
        for o in [rotation(theta), reflection(theta)] {
            best = best.min((a - b * o).norm());
        }
    }
    best
}
