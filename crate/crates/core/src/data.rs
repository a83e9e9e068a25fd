//! Observed dynamic arrays.
//!
//! Every time slice is stored flat in column-major order (axis 0 fastest), so
//! a slice reshaped to `n₁ × (n₂⋯n_M)` is exactly its mode-1 unfolding.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;

use crate::error::{FfsError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObservationKind {
    GaussianMatrix,
    BernoulliNetwork,
    GaussianTensor,
}

impl ObservationKind {
    pub fn is_gaussian(self) -> bool {
        !matches!(self, ObservationKind::BernoulliNetwork)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ObservationKind::GaussianMatrix => "gaussian-matrix",
            ObservationKind::BernoulliNetwork => "bernoulli-network",
            ObservationKind::GaussianTensor => "gaussian-tensor",
        }
    }
}

impl fmt::Display for ObservationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ObservationKind {
    type Err = FfsError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian-matrix" | "gaussian" => Ok(ObservationKind::GaussianMatrix),
            "bernoulli-network" | "bernoulli" => Ok(ObservationKind::BernoulliNetwork),
            "gaussian-tensor" | "tensor" => Ok(ObservationKind::GaussianTensor),
            other => Err(FfsError::InvalidArgument(format!("unknown observation kind {other:?}"))),
        }
    }
}

/// A dynamic matrix, symmetric network or tensor observed at `T` time points.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationSet {
    pub kind: ObservationKind,
    /// Mode sizes `n₁, …, n_M` of one slice.
    pub dims: Vec<usize>,
    /// One flat column-major array per time point.
    pub slices: Vec<Vec<f64>>,
    /// `true` marks an observed entry; `None` means fully observed.
    pub mask: Option<Vec<Vec<bool>>>,
}

impl ObservationSet {
    pub fn new(
        kind: ObservationKind,
        dims: Vec<usize>,
        slices: Vec<Vec<f64>>,
        mask: Option<Vec<Vec<bool>>>,
    ) -> Result<Self> {
        let set = Self { kind, dims, slices, mask };
        set.validate()?;
        Ok(set)
    }

    /// Builds a matrix-kind set from per-time matrices.
    pub fn from_matrices(kind: ObservationKind, mats: &[DMatrix<f64>]) -> Result<Self> {
        let first = mats
            .first()
            .ok_or_else(|| FfsError::InvalidArgument("at least one time slice required".into()))?;
        let dims = vec![first.nrows(), first.ncols()];
        // nalgebra storage is column-major, matching the slice layout.
        let slices = mats.iter().map(|m| m.as_slice().to_vec()).collect();
        Self::new(kind, dims, slices, None)
    }

    pub fn validate(&self) -> Result<()> {
        if self.slices.is_empty() {
            return Err(FfsError::InvalidArgument("at least one time slice required".into()));
        }
        if self.dims.iter().any(|&n| n == 0) {
            return Err(FfsError::InvalidArgument(format!("zero-sized mode in {:?}", self.dims)));
        }
        match self.kind {
            ObservationKind::GaussianMatrix if self.dims.len() != 2 => {
                return Err(FfsError::DimensionMismatch("matrix data needs two modes".into()))
            }
            ObservationKind::BernoulliNetwork if self.dims.len() != 2 || self.dims[0] != self.dims[1] => {
                return Err(FfsError::DimensionMismatch("network data needs square slices".into()))
            }
            ObservationKind::GaussianTensor if self.dims.len() < 2 => {
                return Err(FfsError::DimensionMismatch("tensor data needs at least two modes".into()))
            }
            _ => {}
        }
        let size = self.slice_len();
        for (t, s) in self.slices.iter().enumerate() {
            if s.len() != size {
                return Err(FfsError::DimensionMismatch(format!(
                    "slice {t} has {} entries, expected {size}",
                    s.len()
                )));
            }
            if s.iter().any(|v| !v.is_finite()) {
                return Err(FfsError::InvalidArgument(format!("slice {t} has non-finite values")));
            }
        }
        if let Some(mask) = &self.mask {
            if mask.len() != self.slices.len() || mask.iter().any(|m| m.len() != size) {
                return Err(FfsError::DimensionMismatch("mask shape differs from data".into()));
            }
        }
        if self.kind == ObservationKind::BernoulliNetwork {
            let n = self.dims[0];
            for (t, s) in self.slices.iter().enumerate() {
                for j in 0..n {
                    for i in 0..n {
                        let v = s[i + n * j];
                        if v != 0.0 && v != 1.0 {
                            return Err(FfsError::InvalidArgument(format!("non-binary value {v} at t={t}")));
                        }
                        if i == j && v != 0.0 {
                            return Err(FfsError::InvalidArgument(format!("self-loop at t={t}, node {i}")));
                        }
                        if v != s[j + n * i] {
                            return Err(FfsError::InvalidArgument(format!("asymmetric network at t={t}")));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Number of time points `T`.
    pub fn len(&self) -> usize {
        self.slices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slices.is_empty()
    }

    pub fn slice_len(&self) -> usize {
        self.dims.iter().product()
    }

    /// Column-major strides of one slice.
    pub fn strides(&self) -> Vec<usize> {
        let mut strides = Vec::with_capacity(self.dims.len());
        let mut acc = 1;
        for &n in &self.dims {
            strides.push(acc);
            acc *= n;
        }
        strides
    }

    pub fn linear_index(&self, idx: &[usize]) -> usize {
        idx.iter().zip(self.strides()).map(|(i, s)| i * s).sum()
    }

    pub fn multi_index(&self, mut lin: usize) -> Vec<usize> {
        self.dims
            .iter()
            .map(|&n| {
                let i = lin % n;
                lin /= n;
                i
            })
            .collect()
    }

    /// Number of latent factor modes: the symmetric network shares one.
    pub fn num_modes(&self) -> usize {
        match self.kind {
            ObservationKind::BernoulliNetwork => 1,
            _ => self.dims.len(),
        }
    }

    /// Factor mode that indexes data axis `axis`.
    pub fn mode_of_axis(&self, axis: usize) -> usize {
        match self.kind {
            ObservationKind::BernoulliNetwork => 0,
            _ => axis,
        }
    }

    pub fn mode_size(&self, mode: usize) -> usize {
        self.dims[mode]
    }

    pub fn is_masked_in(&self, t: usize, lin: usize) -> bool {
        self.mask.as_ref().is_none_or(|m| m[t][lin])
    }

    /// Whether entry `lin` of slice `t` enters the likelihood. A network dyad
    /// counts once, through its upper-triangle entry.
    pub fn in_likelihood(&self, t: usize, lin: usize) -> bool {
        if self.kind == ObservationKind::BernoulliNetwork {
            let n = self.dims[0];
            let (i, j) = (lin % n, lin / n);
            if i >= j {
                return false;
            }
        }
        self.is_masked_in(t, lin)
    }

    /// Linear indices of slice `t` that enter the likelihood.
    pub fn likelihood_entries(&self, t: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.slice_len()).filter(move |&lin| self.in_likelihood(t, lin))
    }

    pub fn num_likelihood_entries(&self) -> usize {
        (0..self.len()).map(|t| self.likelihood_entries(t).count()).sum()
    }

    /// Slice `t` as an `n₁ × (n₂⋯n_M)` matrix (mode-1 unfolding).
    pub fn unfolding(&self, t: usize) -> DMatrix<f64> {
        let rows = self.dims[0];
        DMatrix::from_column_slice(rows, self.slice_len() / rows, &self.slices[t])
    }
}
