//! Factorized fusion shrinkage: variational inference for dynamic matrices,
//! networks and CP tensors whose latent factors move in sparse jumps.

pub mod baselines;
pub mod chain;
pub mod data;
pub mod engine;
pub mod error;
pub mod io;
pub mod likelihood;
pub mod linalg;
pub mod metrics;
pub mod postprocess;
pub mod scales;
pub mod simgen;

pub use chain::{chain_smooth, dense_joint_oracle, expected_transition_sq, ChainPosterior, GaussianChainPrior, SitePotential};
pub use data::{ObservationKind, ObservationSet};
pub use engine::{fit, predict_mean, AuxState, CaviEngine, FitResult, ModeState, ModelConfig, PriorKind};
pub use error::{FfsError, Result};
pub use scales::{InverseGammaQ, SubjectScales};
pub use simgen::SyntheticDataset;
