// Copyright 2026 The posqsd Authors
// SPDX-License-Identifier: Apache-2.0

//! Master-equation generators in Redfield-tensor, non-diagonal and diagonal
//! (Lindblad) form, with conversions between them.
//!
//! All coefficients are carried in the units they are given in (cm⁻¹ for the
//! dimer presets); time is measured in the reciprocal unit.

use std::borrow::Cow;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::matrix::{
    self, anticommutator, build_generalized_gellmann_basis, commutator, frobenius_norm,
    hermitian_eigendecomposition, hermiticity_defect, is_hermitian, trace, ComplexMatrix,
    OperatorBasis, I,
};

/// Relative threshold below which a diagonal-form rate counts as zero.
pub const ZERO_RATE_THRESHOLD: f64 = 1e-10;

/// Tolerance for the Redfield trace and Hermiticity invariants.
pub const TENSOR_TOLERANCE: f64 = 1e-10;

/// G[ρ] = -i[H, ρ] + Σ_j c_j (L_j ρ L_j† - ½{L_j† L_j, ρ}) with real,
/// possibly negative, rates.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalGenerator {
    pub hamiltonian: ComplexMatrix,
    pub rates: Vec<f64>,
    pub lindblad_ops: Vec<ComplexMatrix>,
}

impl DiagonalGenerator {
    pub fn new(
        hamiltonian: ComplexMatrix,
        rates: Vec<f64>,
        lindblad_ops: Vec<ComplexMatrix>,
    ) -> Result<Self> {
        let n = hamiltonian.nrows();
        if n == 0 || n > matrix::MAX_DIM {
            return Err(Error::InvalidDimension(n));
        }
        if !is_hermitian(&hamiltonian) {
            return Err(Error::NonHermitianInput {
                defect: hermiticity_defect(&hamiltonian),
            });
        }
        if rates.len() != lindblad_ops.len() {
            return Err(Error::Config(format!(
                "{} rates for {} Lindblad operators",
                rates.len(),
                lindblad_ops.len()
            )));
        }
        if rates.len() > n * n - 1 && n > 1 {
            return Err(Error::Config(format!(
                "{} channels exceed n²-1 = {}",
                rates.len(),
                n * n - 1
            )));
        }
        if let Some(&bad) = rates.iter().find(|c| !c.is_finite()) {
            return Err(Error::Config(format!("non-finite rate {bad}")));
        }
        for op in &lindblad_ops {
            if op.nrows() != n || op.ncols() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: op.nrows(),
                });
            }
        }
        Ok(Self {
            hamiltonian,
            rates,
            lindblad_ops,
        })
    }

    /// Purely Hamiltonian generator.
    pub fn unitary(hamiltonian: ComplexMatrix) -> Result<Self> {
        Self::new(hamiltonian, Vec::new(), Vec::new())
    }

    pub fn zero(n: usize) -> Self {
        Self {
            hamiltonian: matrix::zeros(n),
            rates: Vec::new(),
            lindblad_ops: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.nrows()
    }

    pub fn n_channels(&self) -> usize {
        self.rates.len()
    }

    pub fn channels(&self) -> impl Iterator<Item = (f64, &ComplexMatrix)> {
        self.rates.iter().copied().zip(&self.lindblad_ops)
    }

    pub fn min_rate(&self) -> f64 {
        self.rates.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs_rate(&self) -> f64 {
        self.rates.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    /// Whether every rate is non-negative up to `1e-10 · max|c|`.
    pub fn has_nonnegative_rates(&self) -> bool {
        self.rates.is_empty()
            || self.min_rate() >= -ZERO_RATE_THRESHOLD * self.max_abs_rate().max(1.0)
    }

    /// Canonical form: every L_j traceless with Tr(L_j† L_j) = 1.
    pub fn is_canonical(&self) -> bool {
        self.lindblad_ops.iter().all(|l| {
            trace(l).norm() <= 1e-10 * (1.0 + frobenius_norm(l))
                && (frobenius_norm(l).powi(2) - 1.0).abs() <= 1e-10
        })
    }

    /// Equivalent generator in canonical form. Trace parts of the Lindblad
    /// operators move into the Hamiltonian, norms into the rates.
    pub fn canonicalize(&self) -> Self {
        let n = self.dim();
        let mut hamiltonian = self.hamiltonian.clone();
        let mut rates = Vec::with_capacity(self.n_channels());
        let mut ops = Vec::with_capacity(self.n_channels());
        for (c, l) in self.channels() {
            let shift = trace(l) / n as f64;
            let traceless = l - matrix::identity(n) * shift;
            // L = L0 + a·𝟙 contributes [½(a* L0 - a L0†), ρ] on top of D[L0].
            let dh = (&traceless * shift.conj() - traceless.adjoint() * shift) * (I * 0.5 * c);
            hamiltonian += dh;
            let norm = frobenius_norm(&traceless);
            if norm == 0.0 {
                continue;
            }
            rates.push(c * norm * norm);
            ops.push(traceless.unscale(norm));
        }
        Self {
            hamiltonian: matrix::hermitian_part(&hamiltonian),
            rates,
            lindblad_ops: ops,
        }
    }

    /// Same operators with new rates.
    pub fn with_rates(&self, rates: Vec<f64>) -> Result<Self> {
        Self::new(self.hamiltonian.clone(), rates, self.lindblad_ops.clone())
    }

    /// Generator of `G ⊗ id` on the doubled space (operators tensored with
    /// the identity on an n-level ancilla).
    pub fn extend_with_ancilla(&self) -> Self {
        let id = matrix::identity(self.dim());
        Self {
            hamiltonian: matrix::kron(&self.hamiltonian, &id),
            rates: self.rates.clone(),
            lindblad_ops: self
                .lindblad_ops
                .iter()
                .map(|l| matrix::kron(l, &id))
                .collect(),
        }
    }

    pub fn apply(&self, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
        apply_generator(self, rho)
    }

    /// Redfield coefficients R_{ij;kl} = ⟨i|G[|k⟩⟨l|]|j⟩.
    pub fn to_redfield(&self) -> RedfieldTensor {
        RedfieldTensor::from_map(self.dim(), |x| apply_unchecked(self, x))
    }
}

/// -i[H, ρ] + Σ_j c_j (L_j ρ L_j† - ½{L_j† L_j, ρ})
pub fn apply_generator(gen: &DiagonalGenerator, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
    if rho.nrows() != gen.dim() || rho.ncols() != gen.dim() {
        return Err(Error::DimensionMismatch {
            expected: gen.dim(),
            found: rho.nrows(),
        });
    }
    Ok(apply_unchecked(gen, rho))
}

fn apply_unchecked(gen: &DiagonalGenerator, rho: &ComplexMatrix) -> ComplexMatrix {
    let mut out = commutator(&gen.hamiltonian, rho) * (-I);
    for (c, l) in gen.channels() {
        if c == 0.0 {
            continue;
        }
        let l_dag = l.adjoint();
        let jump = l * rho * &l_dag;
        let ldl = &l_dag * l;
        out += (jump - anticommutator(&ldl, rho).scale(0.5)).scale(c);
    }
    out
}

/// Coefficients of ρ̇_ij = Σ_kl R_{ij;kl} ρ_kl, stored row-major in (i, j, k, l).
#[derive(Debug, Clone, PartialEq)]
pub struct RedfieldTensor {
    dim: usize,
    coeffs: Vec<Complex64>,
}

impl RedfieldTensor {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            coeffs: vec![matrix::ZERO; dim.pow(4)],
        }
    }

    /// From a flattened row-major (i, j, k, l) coefficient list.
    pub fn from_flat(dim: usize, coeffs: Vec<Complex64>) -> Result<Self> {
        if dim == 0 || dim > matrix::MAX_DIM {
            return Err(Error::InvalidDimension(dim));
        }
        if coeffs.len() != dim.pow(4) {
            return Err(Error::Config(format!(
                "Redfield tensor of dimension {dim} needs {} coefficients, got {}",
                dim.pow(4),
                coeffs.len()
            )));
        }
        Ok(Self { dim, coeffs })
    }

    /// Tabulates a linear superoperator.
    pub fn from_map<F>(dim: usize, map: F) -> Self
    where
        F: Fn(&ComplexMatrix) -> ComplexMatrix,
    {
        let mut tensor = Self::zeros(dim);
        for k in 0..dim {
            for l in 0..dim {
                let mut unit = matrix::zeros(dim);
                unit[(k, l)] = matrix::ONE;
                let image = map(&unit);
                for i in 0..dim {
                    for j in 0..dim {
                        tensor.set(i, j, k, l, image[(i, j)]);
                    }
                }
            }
        }
        tensor
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_flat(&self) -> &[Complex64] {
        &self.coeffs
    }

    #[inline]
    fn index(&self, i: usize, j: usize, k: usize, l: usize) -> usize {
        ((i * self.dim + j) * self.dim + k) * self.dim + l
    }

    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> Complex64 {
        self.coeffs[self.index(i, j, k, l)]
    }

    pub fn set(&mut self, i: usize, j: usize, k: usize, l: usize, value: Complex64) {
        let idx = self.index(i, j, k, l);
        self.coeffs[idx] = value;
    }

    pub fn apply(&self, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
        let n = self.dim;
        if rho.nrows() != n || rho.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: rho.nrows(),
            });
        }
        Ok(ComplexMatrix::from_fn(n, n, |i, j| {
            let mut acc = matrix::ZERO;
            for k in 0..n {
                for l in 0..n {
                    acc += self.get(i, j, k, l) * rho[(k, l)];
                }
            }
            acc
        }))
    }

    /// max over k,l of |Σ_i R_{ii;kl}|.
    pub fn trace_defect(&self) -> f64 {
        let n = self.dim;
        let mut worst: f64 = 0.0;
        for k in 0..n {
            for l in 0..n {
                let s: Complex64 = (0..n).map(|i| self.get(i, i, k, l)).sum();
                worst = worst.max(s.norm());
            }
        }
        worst
    }

    /// max |R_{ij;kl} - conj(R_{ji;lk})|.
    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.dim;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let d = self.get(i, j, k, l) - self.get(j, i, l, k).conj();
                        worst = worst.max(d.norm());
                    }
                }
            }
        }
        worst
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    pub fn validate(&self) -> Result<()> {
        let scale = 1.0_f64.max(self.max_abs());
        let defect = self.trace_defect();
        if defect > TENSOR_TOLERANCE * scale {
            return Err(Error::NonTracePreserving { defect });
        }
        let defect = self.hermiticity_defect();
        if defect > TENSOR_TOLERANCE * scale {
            return Err(Error::NonHermiticityPreserving { defect });
        }
        Ok(())
    }
}

/// G[ρ] = -i[H, ρ] + Σ_{i,j ≥ 1} d_ij (τ_i ρ τ_j† - ½{τ_j† τ_i, ρ}) over a
/// Gell-Mann basis.
#[derive(Debug, Clone)]
pub struct NonDiagonalGenerator {
    pub hamiltonian: ComplexMatrix,
    pub kossakowski: ComplexMatrix,
    pub basis: OperatorBasis,
}

impl NonDiagonalGenerator {
    pub fn new(hamiltonian: ComplexMatrix, kossakowski: ComplexMatrix) -> Result<Self> {
        let n = hamiltonian.nrows();
        let basis = build_generalized_gellmann_basis(n)?;
        if kossakowski.nrows() != n * n - 1 || kossakowski.ncols() != n * n - 1 {
            return Err(Error::DimensionMismatch {
                expected: n * n - 1,
                found: kossakowski.nrows(),
            });
        }
        if !is_hermitian(&hamiltonian) {
            return Err(Error::NonHermitianInput {
                defect: hermiticity_defect(&hamiltonian),
            });
        }
        let defect = hermiticity_defect(&kossakowski);
        if defect > TENSOR_TOLERANCE * (1.0 + frobenius_norm(&kossakowski)) {
            return Err(Error::NonHermitianInput { defect });
        }
        Ok(Self {
            hamiltonian,
            kossakowski,
            basis,
        })
    }

    pub fn dim(&self) -> usize {
        self.basis.dim
    }

    pub fn apply(&self, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
        let n = self.dim();
        if rho.nrows() != n || rho.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: rho.nrows(),
            });
        }
        let taus = &self.basis.elements[1..];
        let mut out = commutator(&self.hamiltonian, rho) * (-I);
        for (i, ti) in taus.iter().enumerate() {
            for (j, tj) in taus.iter().enumerate() {
                let d = self.kossakowski[(i, j)];
                if d == matrix::ZERO {
                    continue;
                }
                let tj_dag = tj.adjoint();
                let term = ti * rho * &tj_dag - anticommutator(&(&tj_dag * ti), rho).scale(0.5);
                out += term * d;
            }
        }
        Ok(out)
    }

    pub fn to_diagonal(&self) -> Result<DiagonalGenerator> {
        nondiagonal_to_diagonal(self)
    }
}

/// Reconstructs H and the Kossakowski matrix from Redfield coefficients.
///
/// With the Hilbert–Schmidt basis {τ_i}:
/// d_ij = Σ_k Tr(τ_i† G[τ_k] τ_j τ_k†), τ = (1/n) Σ_{i≥1,k} Tr(τ_k† τ_i† G[τ_k]) τ_i,
/// H = (τ† - τ) / 2i.
pub fn redfield_to_nondiagonal(tensor: &RedfieldTensor) -> Result<NonDiagonalGenerator> {
    tensor.validate()?;
    let n = tensor.dim();
    let basis = build_generalized_gellmann_basis(n)?;
    let images: Vec<ComplexMatrix> = basis
        .elements
        .iter()
        .map(|tau| tensor.apply(tau))
        .collect::<Result<_>>()?;

    let m = n * n - 1;
    let mut kossakowski = ComplexMatrix::zeros(m, m);
    let mut tau_sum = matrix::zeros(n);
    for i in 1..=m {
        let ti_dag = basis.elements[i].adjoint();
        let mut coeff_i0 = matrix::ZERO;
        for (tk, gk) in basis.elements.iter().zip(&images) {
            coeff_i0 += trace(&(tk.adjoint() * &ti_dag * gk));
        }
        tau_sum += &basis.elements[i] * coeff_i0;
        for j in 1..=m {
            let tj = &basis.elements[j];
            let mut d = matrix::ZERO;
            for (tk, gk) in basis.elements.iter().zip(&images) {
                d += trace(&(&ti_dag * gk * tj * tk.adjoint()));
            }
            kossakowski[(i - 1, j - 1)] = d;
        }
    }
    let tau = tau_sum.unscale(n as f64);
    let hamiltonian = (tau.adjoint() - &tau) / (I * 2.0);
    NonDiagonalGenerator::new(
        matrix::hermitian_part(&hamiltonian),
        matrix::hermitian_part(&kossakowski),
    )
}

/// Diagonalizes the Kossakowski matrix: rates are its eigenvalues (descending)
/// and L_j = Σ_i U_ij τ_i. Channels with |c_j| <= 1e-10 max(max|c|, ‖H‖_F)
/// are dropped. Each eigenvector is phased so its largest component is real
/// positive.
pub fn nondiagonal_to_diagonal(gen: &NonDiagonalGenerator) -> Result<DiagonalGenerator> {
    let eig = hermitian_eigendecomposition(&matrix::hermitian_part(&gen.kossakowski))?;
    // Rates that are pure roundoff of a large Hamiltonian must not survive.
    let max_abs = eig
        .values
        .iter()
        .fold(frobenius_norm(&gen.hamiltonian), |m, c| m.max(c.abs()));
    let mut rates = Vec::new();
    let mut ops = Vec::new();
    for (c, mut u) in eig.values.into_iter().zip(eig.vectors) {
        if c.abs() <= ZERO_RATE_THRESHOLD * max_abs || c == 0.0 {
            continue;
        }
        matrix::fix_phase(&mut u);
        rates.push(c);
        ops.push(gen.basis.combine_traceless(u.as_slice()));
    }
    DiagonalGenerator::new(gen.hamiltonian.clone(), rates, ops)
}

/// Full Redfield → Lindblad conversion.
pub fn redfield_to_diagonal(tensor: &RedfieldTensor) -> Result<DiagonalGenerator> {
    redfield_to_nondiagonal(tensor)?.to_diagonal()
}

/// Expansion coefficients Tr(τ_i† H) of the Hamiltonian in the Gell-Mann
/// basis, τ_0 included.
pub fn hamiltonian_coefficients(gen: &DiagonalGenerator) -> Result<Vec<Complex64>> {
    let basis = build_generalized_gellmann_basis(gen.dim())?;
    Ok(basis.coefficients(&gen.hamiltonian))
}

/// Anything that yields a diagonal-form generator at time t.
pub trait Dynamics: Send + Sync {
    fn dim(&self) -> usize;

    fn generator_at(&self, t: f64) -> Cow<'_, DiagonalGenerator>;
}

impl Dynamics for DiagonalGenerator {
    fn dim(&self) -> usize {
        DiagonalGenerator::dim(self)
    }

    fn generator_at(&self, _t: f64) -> Cow<'_, DiagonalGenerator> {
        Cow::Borrowed(self)
    }
}

type GeneratorFn = dyn Fn(f64) -> DiagonalGenerator + Send + Sync;

/// Generator with time-dependent H(t), c_j(t), L_j(t), defined on [t0, t1].
#[derive(Clone)]
pub struct TimeDependentGenerator {
    dim: usize,
    domain: (f64, f64),
    sample: Arc<GeneratorFn>,
}

impl TimeDependentGenerator {
    pub fn new<F>(dim: usize, domain: (f64, f64), sample: F) -> Self
    where
        F: Fn(f64) -> DiagonalGenerator + Send + Sync + 'static,
    {
        Self {
            dim,
            domain,
            sample: Arc::new(sample),
        }
    }

    pub fn domain(&self) -> (f64, f64) {
        self.domain
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.domain.0 && t <= self.domain.1
    }

    pub fn sample(&self, t: f64) -> DiagonalGenerator {
        (self.sample)(t)
    }
}

impl fmt::Debug for TimeDependentGenerator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TimeDependentGenerator")
            .field("dim", &self.dim)
            .field("domain", &self.domain)
            .finish_non_exhaustive()
    }
}

impl Dynamics for TimeDependentGenerator {
    fn dim(&self) -> usize {
        self.dim
    }

    fn generator_at(&self, t: f64) -> Cow<'_, DiagonalGenerator> {
        Cow::Owned(self.sample(t))
    }
}
