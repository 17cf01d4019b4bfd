// Copyright 2026 The posqsd Authors
// SPDX-License-Identifier: Apache-2.0

//! Built-in models: the non-CP qubit semigroup with c = (1, 1, -1) on the
//! Pauli operators, and the three-level exciton dimer under partial and full
//! secular approximation (Redfield coefficients in cm⁻¹).

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::generator::{self, DiagonalGenerator, RedfieldTensor};
use crate::matrix::{self, c64, expectation, pauli, real, StateVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelName {
    QubitGisinDiosi,
    DimerPartialSa,
    DimerFullSa,
}

impl ModelName {
    pub const ALL: [ModelName; 3] = [
        ModelName::QubitGisinDiosi,
        ModelName::DimerPartialSa,
        ModelName::DimerFullSa,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelName::QubitGisinDiosi => "qubit_gisin_diosi",
            ModelName::DimerPartialSa => "dimer_partial_sa",
            ModelName::DimerFullSa => "dimer_full_sa",
        }
    }
}

impl fmt::Display for ModelName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelName::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown model `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SecularApproximation {
    Partial,
    Full,
}

#[derive(Debug, Clone)]
pub enum PresetGenerator {
    Diagonal(DiagonalGenerator),
    Redfield(RedfieldTensor),
}

#[derive(Debug, Clone)]
pub struct ModelPreset {
    pub name: ModelName,
    pub generator: PresetGenerator,
    pub default_initial_state: StateVector,
    pub reference_values: Vec<(&'static str, f64)>,
}

impl ModelPreset {
    pub fn dim(&self) -> usize {
        self.default_initial_state.len()
    }

    /// Diagonal (Lindblad) form, converting from Redfield coefficients when
    /// needed.
    pub fn diagonal(&self) -> Result<DiagonalGenerator> {
        match &self.generator {
            PresetGenerator::Diagonal(g) => Ok(g.clone()),
            PresetGenerator::Redfield(r) => generator::redfield_to_diagonal(r),
        }
    }

    pub fn reference(&self, key: &str) -> Option<f64> {
        self.reference_values
            .iter()
            .find_map(|(k, v)| (*k == key).then_some(*v))
    }

    /// Recomputes every reference value from the generator and checks it to
    /// 1e-9 (rates) and 1e-8 relative (Hamiltonian coefficients).
    pub fn self_check(&self) -> Result<()> {
        let gen = self.diagonal()?;
        let coeffs = generator::hamiltonian_coefficients(&gen)?;
        for &(key, expected) in &self.reference_values {
            let (found, tol) = if let Some(idx) = key.strip_prefix("rate_") {
                let k: usize = idx.parse().expect("rate index");
                (gen.rates.get(k - 1).copied().unwrap_or(f64::NAN), 1e-9)
            } else if let Some(idx) = key.strip_prefix("h_") {
                let k: usize = idx.parse().expect("hamiltonian index");
                (coeffs[k].re, 1e-8 * expected.abs().max(1.0))
            } else {
                continue;
            };
            if !((found - expected).abs() <= tol) {
                return Err(Error::Config(format!(
                    "{}: {key} = {found}, expected {expected}",
                    self.name
                )));
            }
        }
        Ok(())
    }
}

pub fn preset(name: ModelName) -> ModelPreset {
    match name {
        ModelName::QubitGisinDiosi => qubit_model(),
        ModelName::DimerPartialSa => dimer_model(SecularApproximation::Partial),
        ModelName::DimerFullSa => dimer_model(SecularApproximation::Full),
    }
}

/// dρ/dt = Σ_j c_j (σ_j ρ σ_j - ρ) with c = (1, 1, -1), H = 0.
///
/// The Pauli operators are kept unnormalized (Tr σ² = 2); use
/// [`DiagonalGenerator::canonicalize`] for the canonical form.
pub fn qubit_model() -> ModelPreset {
    let gen = DiagonalGenerator::new(matrix::zeros(2), vec![1.0, 1.0, -1.0], pauli().to_vec())
        .expect("valid qubit generator");
    ModelPreset {
        name: ModelName::QubitGisinDiosi,
        generator: PresetGenerator::Diagonal(gen),
        default_initial_state: matrix::basis_state(2, 0),
        reference_values: vec![("rate_1", 1.0), ("rate_2", 1.0), ("rate_3", -1.0), ("z_decay_rate", 4.0)],
    }
}

/// Bloch vector s_j = ⟨ψ|σ_j|ψ⟩.
pub fn bloch_vector(psi: &StateVector) -> [f64; 3] {
    pauli().map(|s| expectation(&s, psi).re)
}

pub fn dimer_model(variant: SecularApproximation) -> ModelPreset {
    let sqrt5 = 5f64.sqrt();
    let sqrt19 = 19f64.sqrt();
    let sqrt2 = 2f64.sqrt();
    let h8 = -12233.0 * (2.0f64 / 3.0).sqrt();
    let (name, mut rates, mut reference) = match variant {
        SecularApproximation::Partial => (
            ModelName::DimerPartialSa,
            vec![
                2.0 + sqrt5,
                4.0,
                4.0,
                4.0,
                4.0,
                (4.0 + sqrt19) / 3.0,
                2.0 - sqrt5,
                (4.0 - sqrt19) / 3.0,
            ],
            vec![
                ("h_1", -71.0 * sqrt2),
                ("h_2", -sqrt2 / 3.0),
                ("h_3", 23.0 * sqrt2),
                ("h_8", h8),
            ],
        ),
        SecularApproximation::Full => (
            ModelName::DimerFullSa,
            vec![4.0, 4.0, 4.0, 4.0, 4.0, 8.0 / 3.0],
            vec![("h_1", 0.0), ("h_2", 0.0), ("h_3", 23.0 * sqrt2), ("h_8", h8)],
        ),
    };
    rates.sort_by(|a, b| b.total_cmp(a));
    const RATE_KEYS: [&str; 8] = [
        "rate_1", "rate_2", "rate_3", "rate_4", "rate_5", "rate_6", "rate_7", "rate_8",
    ];
    reference.extend(RATE_KEYS.iter().copied().zip(rates));
    ModelPreset {
        name,
        generator: PresetGenerator::Redfield(dimer_redfield(variant)),
        default_initial_state: matrix::basis_state(3, 1),
        reference_values: reference,
    }
}

/// Redfield coefficients R_{ij;kl} of the dimer in cm⁻¹ (sites |1⟩, |2⟩,
/// ground |3⟩). The full secular approximation zeroes the twelve
/// population–coherence couplings.
pub fn dimer_redfield(variant: SecularApproximation) -> RedfieldTensor {
    let mut r = RedfieldTensor::zeros(3);
    // 1-based indices as the coefficients are usually quoted.
    let mut set = |i: usize, j: usize, k: usize, l: usize, re: f64, im: f64| {
        r.set(i - 1, j - 1, k - 1, l - 1, c64(re, im));
    };
    set(1, 1, 1, 1, -4.0, 0.0);
    set(2, 2, 2, 2, -4.0, 0.0);
    set(3, 3, 3, 3, -8.0, 0.0);
    set(1, 1, 3, 3, 4.0, 0.0);
    set(3, 3, 1, 1, 4.0, 0.0);
    set(2, 2, 3, 3, 4.0, 0.0);
    set(3, 3, 2, 2, 4.0, 0.0);
    set(1, 2, 1, 2, -8.0, -46.0);
    set(2, 1, 2, 1, -8.0, 46.0);
    set(1, 3, 1, 3, -9.0, 12210.0);
    set(3, 1, 3, 1, -9.0, -12210.0);
    set(2, 3, 2, 3, -9.0, 12256.0);
    set(3, 2, 3, 2, -9.0, -12256.0);
    if variant == SecularApproximation::Partial {
        for &(i, j, k, l) in &[(1, 1, 1, 2), (2, 2, 2, 1), (3, 1, 3, 2), (3, 2, 3, 1)] {
            set(i, j, k, l, 0.0, -71.0);
        }
        for &(i, j, k, l) in &[(2, 2, 1, 2), (1, 1, 2, 1), (1, 3, 2, 3), (2, 3, 1, 3)] {
            set(i, j, k, l, 0.0, 71.0);
        }
        set(2, 1, 1, 1, -1.0, 71.0);
        set(1, 2, 1, 1, -1.0, -71.0);
        set(1, 2, 2, 2, 1.0, 71.0);
        set(2, 1, 2, 2, 1.0, -71.0);
    }
    r
}

/// Diagonal-form rates the dimer presets are expected to convert to, in
/// descending order.
pub fn dimer_reference_rates(variant: SecularApproximation) -> Vec<f64> {
    let preset = dimer_model(variant);
    (1..=8)
        .filter_map(|k| preset.reference(&format!("rate_{k}")))
        .collect()
}

/// Convenience: a real diagonal matrix.
pub fn diag(values: &[f64]) -> matrix::ComplexMatrix {
    let n = values.len();
    matrix::ComplexMatrix::from_fn(n, n, |i, j| if i == j { real(values[i]) } else { matrix::ZERO })
}
