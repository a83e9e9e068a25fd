//! Comparison estimators.

pub mod cp;
pub mod fused;
pub mod svd;

pub use cp::{cp_als, cp_reconstruct, CpFit};
pub use fused::{
    cv_fused_lasso, default_lambda_grid, flasso1, flasso1_slices, flasso2, fused_lasso_1d, fused_objective,
    l1_trendfilter_pg, lambda_max, FusedPath, LambdaGrid,
};
pub use svd::{
    hard_threshold_coefficient, optimal_hard_threshold_rank, svd1, svd2, svd2_windowed, svd_rank_d, LowRankEstimate,
};
