// Copyright 2026 The posqsd Authors
// SPDX-License-Identifier: Apache-2.0

//! The generalized transition rate operator (GTRO) and positivity
//! diagnostics.
//!
//! For a diagonal-form generator and a pure state ψ,
//!
//! ```text
//! W_ψ = Σ_j c_j (L_j - ℓ_j)|ψ⟩⟨ψ|(L_j - ℓ_j)†,   ℓ_j = ⟨ψ|L_j|ψ⟩.
//! ```
//!
//! The semigroup is positive iff W_ψ ⪰ 0 for every ψ, equivalently iff
//! Σ_j c_j |⟨u|L_j|v⟩|² ≥ 0 for every orthonormal pair (u, v). The checks in
//! this module sample that condition; a pass is evidence, not a proof, while a
//! negative value is a genuine witness.

use std::fmt;

use crate::error::{Error, Result};
use crate::generator::{DiagonalGenerator, Dynamics, TimeDependentGenerator};
use crate::matrix::{
    self, ensure_normalized, frobenius_norm, haar_random_state,
    haar_random_unitary, hermitian_eigendecomposition, ComplexMatrix, StateVector,
};
use crate::rng;

/// Largest system dimension accepted by the ancilla test (extended
/// dimension n² ≤ 128).
pub const ANCILLA_DIM_CAP: usize = 11;

/// ε_clamp = 1e-10 · max(1, ‖W‖_F).
pub fn clamp_tolerance(w: &ComplexMatrix) -> f64 {
    1e-10 * frobenius_norm(w).max(1.0)
}

/// W_ψ for a normalized ψ. Hermitian by construction and W_ψ|ψ⟩ = 0.
pub fn build_gtro(gen: &DiagonalGenerator, psi: &StateVector) -> Result<ComplexMatrix> {
    if psi.len() != gen.dim() {
        return Err(Error::DimensionMismatch {
            expected: gen.dim(),
            found: psi.len(),
        });
    }
    ensure_normalized(psi)?;
    Ok(gtro_unchecked(gen, psi))
}

pub(crate) fn gtro_unchecked(gen: &DiagonalGenerator, psi: &StateVector) -> ComplexMatrix {
    let n = gen.dim();
    let mut w = matrix::zeros(n);
    for (c, l) in gen.channels() {
        if c == 0.0 {
            continue;
        }
        let l_psi = l * psi;
        let ell = psi.dotc(&l_psi);
        let v = l_psi - psi * ell;
        w += (&v * v.adjoint()).scale(c);
    }
    w
}

/// Spectral data of W_ψ.
#[derive(Debug, Clone)]
pub struct GtroDecomposition {
    pub state: StateVector,
    /// All n eigenvalues, descending, with numerical negatives clamped to 0.
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Vec<StateVector>,
    /// Retained noise channels (λ_k > ε_clamp) with φ_k ⊥ ψ.
    pub channels: Vec<(f64, StateVector)>,
}

impl GtroDecomposition {
    /// V_k = |φ_k⟩⟨ψ| for retained channel k.
    pub fn jump_map(&self, k: usize) -> ComplexMatrix {
        &self.channels[k].1 * self.state.adjoint()
    }

    /// B_k = √λ_k |φ_k⟩⟨ψ|.
    pub fn noise_operators(&self) -> Vec<ComplexMatrix> {
        (0..self.channels.len())
            .map(|k| self.jump_map(k).scale(self.channels[k].0.sqrt()))
            .collect()
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        let n = self.state.len();
        let mut w = matrix::zeros(n);
        for (lambda, phi) in &self.channels {
            w += matrix::projector(phi).scale(*lambda);
        }
        w
    }
}

/// Eigendecomposition of W_ψ with clamping.
///
/// Eigenvalues in [-ε_clamp, ε_clamp] are numerical zeros. Anything below
/// -ε_clamp means the map over the step is not positive and is reported as
/// [`Error::PositivityViolation`].
pub fn decompose_gtro(w: &ComplexMatrix, psi: &StateVector) -> Result<GtroDecomposition> {
    if w.nrows() != psi.len() {
        return Err(Error::DimensionMismatch {
            expected: w.nrows(),
            found: psi.len(),
        });
    }
    let eps = clamp_tolerance(w);
    let eig = hermitian_eigendecomposition(w)?;
    let min = eig.values.last().copied().unwrap_or(0.0);
    if min < -eps {
        return Err(Error::PositivityViolation {
            min_eigenvalue: min,
            state: psi.clone(),
        });
    }
    let mut channels = Vec::new();
    for (lambda, phi) in eig.values.iter().zip(&eig.vectors) {
        if *lambda <= eps {
            continue;
        }
        // Exact orthogonality to ψ keeps ⟨ψ|B_k|ψ⟩ = 0 to rounding.
        let perp = phi - psi * psi.dotc(phi);
        let Ok(mut phi) = matrix::normalize(&perp) else {
            continue;
        };
        matrix::fix_phase(&mut phi);
        channels.push((*lambda, phi));
    }
    Ok(GtroDecomposition {
        state: psi.clone(),
        eigenvalues: eig.values.iter().map(|&l| if l < 0.0 { 0.0 } else { l }).collect(),
        eigenvectors: eig.vectors,
        channels,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum VerdictKind {
    Cp,
    PNotCp,
    ViolationFound,
}

impl fmt::Display for VerdictKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VerdictKind::Cp => "CP",
            VerdictKind::PNotCp => "P_not_CP",
            VerdictKind::ViolationFound => "violation_found",
        })
    }
}

#[derive(Debug, Clone)]
pub struct PositivityVerdict {
    pub kind: VerdictKind,
    pub min_rate: f64,
    /// Smallest sampled Kossakowski value (or extended-GTRO eigenvalue for
    /// the ancilla test).
    pub min_value: f64,
    /// Smallest GTRO eigenvalue on the complement of ψ over sampled states.
    pub min_gtro_eigenvalue: f64,
    pub witness_state: Option<StateVector>,
    pub witness_partner: Option<StateVector>,
    pub samples_used: usize,
}

/// Σ_j c_j |⟨u|L_j|v⟩|²
pub fn kossakowski_value(gen: &DiagonalGenerator, u: &StateVector, v: &StateVector) -> f64 {
    gen.channels()
        .map(|(c, l)| c * u.dotc(&(l * v)).norm_sqr())
        .sum()
}

fn value_tolerance(gen: &DiagonalGenerator) -> f64 {
    let scale: f64 = gen
        .channels()
        .map(|(c, l)| c.abs() * frobenius_norm(l).powi(2))
        .sum();
    1e-10 * scale.max(1.0)
}

/// Smallest eigenvalue of W_u restricted to the complement of u, with its
/// eigenvector. For φ ⊥ u the Kossakowski value of (φ, u) equals ⟨φ|W_u|φ⟩,
/// so this is the minimum over all partners of u.
fn min_perp_eigenpair(gen: &DiagonalGenerator, u: &StateVector) -> Result<(f64, StateVector)> {
    let n = gen.dim();
    let w = gtro_unchecked(gen, u);
    let mut basis: Vec<StateVector> = vec![u.clone()];
    for k in 0..n {
        let mut e = matrix::basis_state(n, k);
        for q in &basis {
            e -= q * q.dotc(&e);
        }
        if e.norm() > 1e-6 {
            basis.push(e.unscale(e.norm()));
        }
        if basis.len() == n {
            break;
        }
    }
    let q = ComplexMatrix::from_columns(&basis[1..]);
    let restricted = matrix::hermitian_part(&(q.adjoint() * w * &q));
    let eig = hermitian_eigendecomposition(&restricted)?;
    let last = eig.values.len() - 1;
    let partner = &q * &eig.vectors[last];
    Ok((eig.values[last], partner))
}

/// Sampled Kossakowski condition: all computational-basis pairs plus
/// `n_samples` Haar-random states, each paired with its worst orthogonal
/// partner.
pub fn check_kossakowski(gen: &DiagonalGenerator, n_samples: usize, rng_seed: u64) -> PositivityVerdict {
    let n = gen.dim();
    let mut rng = rng::stream(rng_seed, 0);
    let mut min_value = f64::INFINITY;
    let mut witness = None;
    let mut samples = 0;
    // (state, partner) scores Σ_j c_j |⟨partner|L_j|state⟩|²
    let mut consider = |state: StateVector, partner: StateVector, value: f64, min_value: &mut f64| {
        if value < *min_value {
            *min_value = value;
            witness = Some((state, partner));
        }
    };
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let (v, u) = (matrix::basis_state(n, i), matrix::basis_state(n, j));
                let value = kossakowski_value(gen, &u, &v);
                consider(v, u, value, &mut min_value);
                samples += 1;
            }
        }
    }
    let mut min_gtro = f64::INFINITY;
    for _ in 0..n_samples {
        let v = haar_random_state(n, &mut rng);
        if let Ok((value, partner)) = min_perp_eigenpair(gen, &v) {
            min_gtro = min_gtro.min(value);
            consider(v, partner, value, &mut min_value);
        }
        samples += 1;
    }
    let min_rate = if gen.rates.is_empty() { 0.0 } else { gen.min_rate() };
    let kind = if gen.has_nonnegative_rates() {
        VerdictKind::Cp
    } else if min_value >= -value_tolerance(gen) {
        VerdictKind::PNotCp
    } else {
        VerdictKind::ViolationFound
    };
    let (witness_state, witness_partner) = match witness {
        Some((u, v)) => (Some(u), Some(v)),
        None => (None, None),
    };
    PositivityVerdict {
        kind,
        min_rate,
        min_value,
        min_gtro_eigenvalue: if min_gtro.is_finite() { min_gtro } else { 0.0 },
        witness_state,
        witness_partner,
        samples_used: samples,
    }
}

/// Samples the GTRO of G ⊗ id on the doubled space. A negative eigenvalue
/// witnesses that the original generator is not CP.
///
/// The sample set is the maximally entangled state, then alternately
/// maximally entangled states with a Haar-random local basis and Haar-random
/// states of the doubled space.
pub fn check_cp_via_ancilla(
    gen: &DiagonalGenerator,
    n_samples: usize,
    rng_seed: u64,
) -> Result<PositivityVerdict> {
    let n = gen.dim();
    if n > ANCILLA_DIM_CAP {
        return Err(Error::DimensionCapExceeded {
            dim: n * n,
            cap: ANCILLA_DIM_CAP * ANCILLA_DIM_CAP,
        });
    }
    let extended = gen.extend_with_ancilla();
    let mut rng = rng::stream(rng_seed, 1);
    let mut min_eig = f64::INFINITY;
    let mut witness = None;
    let mut violated = false;
    let total = n_samples.max(1);
    for s in 0..total {
        let psi = match s {
            0 => maximally_entangled(&matrix::identity(n)),
            _ if s % 2 == 1 => maximally_entangled(&haar_random_unitary(n, &mut rng)),
            _ => haar_random_state(n * n, &mut rng),
        };
        let w = gtro_unchecked(&extended, &psi);
        let eps = clamp_tolerance(&w);
        let eig = hermitian_eigendecomposition(&matrix::hermitian_part(&w))?;
        let min = eig.values.last().copied().unwrap_or(0.0);
        if min < min_eig {
            min_eig = min;
            witness = Some(psi);
        }
        violated |= min < -eps;
    }
    let min_rate = if gen.rates.is_empty() { 0.0 } else { gen.min_rate() };
    let kind = if violated {
        VerdictKind::ViolationFound
    } else if gen.has_nonnegative_rates() {
        VerdictKind::Cp
    } else {
        VerdictKind::PNotCp
    };
    Ok(PositivityVerdict {
        kind,
        min_rate,
        min_value: min_eig,
        min_gtro_eigenvalue: min_eig,
        witness_state: witness,
        witness_partner: None,
        samples_used: total,
    })
}

/// Σ_i |a_i⟩ ⊗ |i⟩ / √n for the columns a_i of `local`.
fn maximally_entangled(local: &ComplexMatrix) -> StateVector {
    let n = local.nrows();
    let mut psi = StateVector::zeros(n * n);
    for i in 0..n {
        for a in 0..n {
            psi[a * n + i] = local[(a, i)];
        }
    }
    psi.unscale((n as f64).sqrt())
}

#[derive(Debug, Clone)]
pub struct DivisibilityReport {
    pub points: Vec<(f64, PositivityVerdict)>,
    pub overall: VerdictKind,
}

/// Kossakowski check of G_t at every grid time; the overall verdict is the
/// worst one.
pub fn check_p_divisibility(
    gen: &TimeDependentGenerator,
    time_grid: &[f64],
    n_samples: usize,
    rng_seed: u64,
) -> Result<DivisibilityReport> {
    if let Some(&t) = time_grid.iter().find(|&&t| !gen.contains(t)) {
        return Err(Error::Config(format!(
            "time {t} outside generator domain {:?}",
            gen.domain()
        )));
    }
    let points: Vec<_> = time_grid
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let g = gen.generator_at(t);
            (t, check_kossakowski(&g, n_samples, rng::mix_seed(rng_seed, i as u64)))
        })
        .collect();
    let overall = points
        .iter()
        .map(|(_, v)| v.kind)
        .max()
        .unwrap_or(VerdictKind::Cp);
    Ok(DivisibilityReport { points, overall })
}

/// Haar-random pure state drawn from the stream `(seed, index)`.
pub fn sample_state(n: usize, seed: u64, index: u64) -> StateVector {
    haar_random_state(n, &mut rng::stream(seed, index))
}
