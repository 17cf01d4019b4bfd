// Copyright 2026 The posqsd Authors
// SPDX-License-Identifier: Apache-2.0

//! Shared fixtures for the benchmarks.

use posqsd::matrix::haar_random_state;
use posqsd::models::{dimer_model, qubit_model, SecularApproximation};
use posqsd::rng::stream;
use posqsd::{DiagonalGenerator, StateVector};

pub fn full_dimer() -> DiagonalGenerator {
    dimer_model(SecularApproximation::Full).diagonal().expect("dimer preset")
}

pub fn qubit() -> DiagonalGenerator {
    qubit_model().diagonal().expect("qubit preset")
}

pub fn random_state(n: usize, seed: u64) -> StateVector {
    haar_random_state(n, &mut stream(seed, 0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_build() {
        assert_eq!(full_dimer().dim(), 3);
        assert_eq!(qubit().dim(), 2);
        assert!((random_state(3, 1).norm() - 1.0).abs() < 1e-12);
    }
}
