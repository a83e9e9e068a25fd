//! Compiles and runs every code block of the guide in `book/src`.

#[doc = include_str!("../../../book/src/overview.md")]
pub mod overview {}
#[doc = include_str!("../../../book/src/data.md")]
pub mod data {}
#[doc = include_str!("../../../book/src/chains.md")]
pub mod chains {}
#[doc = include_str!("../../../book/src/shrinkage.md")]
pub mod shrinkage {}
#[doc = include_str!("../../../book/src/likelihoods.md")]
pub mod likelihoods {}
#[doc = include_str!("../../../book/src/inference.md")]
pub mod inference {}
#[doc = include_str!("../../../book/src/postprocess.md")]
pub mod postprocess {}
#[doc = include_str!("../../../book/src/baselines.md")]
pub mod baselines {}
#[doc = include_str!("../../../book/src/simulations.md")]
pub mod simulations {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
