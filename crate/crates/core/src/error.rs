// Copyright 2026 The posqsd Authors
// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

use crate::matrix::StateVector;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (defect {defect:.3e})")]
    NonHermitianInput { defect: f64 },

    #[error("invalid dimension {0}")]
    InvalidDimension(usize),

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("state is not normalized (norm² = {norm_sqr})")]
    UnnormalizedState { norm_sqr: f64 },

    #[error("Redfield tensor is not trace preserving (defect {defect:.3e})")]
    NonTracePreserving { defect: f64 },

    #[error("Redfield tensor is not Hermiticity preserving (defect {defect:.3e})")]
    NonHermiticityPreserving { defect: f64 },

    /// The transition rate operator has an eigenvalue below the clamp
    /// threshold: the map over this step is not positive.
    #[error("positivity violation: rate-operator eigenvalue {min_eigenvalue:.6e}")]
    PositivityViolation {
        min_eigenvalue: f64,
        state: StateVector,
    },

    #[error("channel {channel} has negative rate {rate}; standard QSD needs all rates >= 0")]
    NegativeRate { channel: usize, rate: f64 },

    #[error("dimension {dim} exceeds the cap of {cap}")]
    DimensionCapExceeded { dim: usize, cap: usize },

    /// `witness` is the state at the first abort (lowest trajectory index).
    #[error("all {n_traj} trajectories aborted; first at t = {time}, eigenvalue {min_eigenvalue:.6e}")]
    AllTrajectoriesAborted {
        n_traj: usize,
        time: f64,
        min_eigenvalue: f64,
        witness: StateVector,
    },

    #[error(
        "{n_aborted} trajectories aborted although positivity was verified beforehand; \
         first at t = {time}, eigenvalue {min_eigenvalue:.6e}"
    )]
    UnexpectedAbort {
        n_aborted: usize,
        time: f64,
        min_eigenvalue: f64,
        witness: StateVector,
    },

    #[error("time grids do not match: {0}")]
    GridMismatch(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
