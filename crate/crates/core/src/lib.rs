// Copyright 2026 The posqsd Authors
// SPDX-License-Identifier: Apache-2.0

//! Diffusive unravelings of positive (not necessarily completely positive)
//! Markovian master equations.
//!
//! The pipeline runs from a generator (Redfield coefficients, non-diagonal or
//! diagonal Lindblad form) through positivity diagnostics to single
//! trajectories, parallel ensembles and a deterministic RK4 reference.

pub mod config;
pub mod ensemble;
pub mod error;
pub mod generator;
pub mod matrix;
pub mod models;
pub mod oracle;
pub mod positivity;
pub mod rng;
pub mod unraveling;

pub use config::GeneratorFile;
pub use ensemble::{
    compare_to_oracle, run_ensemble, AbortPolicy, ComparisonReport, EnsembleStats, Observable,
};
pub use error::{Error, Result};
pub use generator::{
    apply_generator, nondiagonal_to_diagonal, redfield_to_diagonal, redfield_to_nondiagonal,
    DiagonalGenerator, Dynamics, NonDiagonalGenerator, RedfieldTensor, TimeDependentGenerator,
};
pub use matrix::{ComplexMatrix, OperatorBasis, StateVector};
pub use models::{preset, ModelName, ModelPreset, SecularApproximation};
pub use oracle::{qubit_closed_form, solve_me, solve_me_strided, DensityMatrix, MeSolution};
pub use positivity::{
    build_gtro, check_cp_via_ancilla, check_kossakowski, check_p_divisibility, decompose_gtro,
    GtroDecomposition, PositivityVerdict, VerdictKind,
};
pub use unraveling::{
    run_trajectory, sde_step, SdeConfig, Trajectory, UnravelingMode, WienerIncrementBlock,
};
