// Copyright 2026 The posqsd Authors
// SPDX-License-Identifier: Apache-2.0

//! Dense complex linear algebra for small operators.
//!
//! Matrices and kets are plain `nalgebra` dynamic types. Everything here is
//! sized for Hilbert spaces of a handful of levels (the ancilla extension of a
//! three-level system is the largest case, 9 levels).

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type ComplexMatrix = DMatrix<Complex64>;
pub type StateVector = DVector<Complex64>;

/// Largest Hilbert-space dimension the crate is meant for.
pub const MAX_DIM: usize = 128;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

#[inline]
pub fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[inline]
pub fn real(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

pub fn identity(n: usize) -> ComplexMatrix {
    ComplexMatrix::identity(n, n)
}

pub fn zeros(n: usize) -> ComplexMatrix {
    ComplexMatrix::zeros(n, n)
}

/// Builds a matrix from row-major nested data.
pub fn from_rows(rows: &[Vec<Complex64>]) -> ComplexMatrix {
    let n = rows.len();
    ComplexMatrix::from_fn(n, n, |i, j| rows[i][j])
}

pub fn frobenius_norm(m: &ComplexMatrix) -> f64 {
    m.norm()
}

pub fn trace(m: &ComplexMatrix) -> Complex64 {
    m.diagonal().iter().sum()
}

pub fn commutator(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a * b - b * a
}

pub fn anticommutator(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a * b + b * a
}

/// max |M_ij - conj(M_ji)|.
pub fn hermiticity_defect(m: &ComplexMatrix) -> f64 {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Hermitian within `1e-12 (1 + ‖M‖_F)`.
pub fn is_hermitian(m: &ComplexMatrix) -> bool {
    m.is_square() && hermiticity_defect(m) <= 1e-12 * (1.0 + frobenius_norm(m))
}

/// Hermitian part `(M + M†) / 2`.
pub fn hermitian_part(m: &ComplexMatrix) -> ComplexMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// |ψ⟩⟨ψ|
pub fn projector(psi: &StateVector) -> ComplexMatrix {
    psi * psi.adjoint()
}

/// ⟨ψ|A|ψ⟩
pub fn expectation(op: &ComplexMatrix, psi: &StateVector) -> Complex64 {
    psi.dotc(&(op * psi))
}

pub fn normalize(psi: &StateVector) -> Result<StateVector> {
    let norm = psi.norm();
    if !(norm.is_finite() && norm > 0.0) {
        return Err(Error::UnnormalizedState {
            norm_sqr: norm * norm,
        });
    }
    Ok(psi.unscale(norm))
}

/// Errors unless `|⟨ψ|ψ⟩ - 1| <= 1e-10`.
pub fn ensure_normalized(psi: &StateVector) -> Result<()> {
    let norm_sqr = psi.norm_squared();
    if (norm_sqr - 1.0).abs() > 1e-10 {
        return Err(Error::UnnormalizedState { norm_sqr });
    }
    Ok(())
}

pub fn basis_state(n: usize, k: usize) -> StateVector {
    let mut v = StateVector::zeros(n);
    v[k] = ONE;
    v
}

pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

/// Spectral decomposition of a Hermitian matrix, eigenvalues descending.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: Vec<StateVector>,
}

impl HermitianEigen {
    /// Σ_k λ_k |v_k⟩⟨v_k|
    pub fn reconstruct(&self) -> ComplexMatrix {
        let n = self.vectors.first().map_or(0, |v| v.len());
        let mut m = zeros(n);
        for (lambda, v) in self.values.iter().zip(&self.vectors) {
            m += projector(v).scale(*lambda);
        }
        m
    }
}

pub fn hermitian_eigendecomposition(m: &ComplexMatrix) -> Result<HermitianEigen> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            found: m.ncols(),
        });
    }
    if !is_hermitian(m) {
        return Err(Error::NonHermitianInput {
            defect: hermiticity_defect(m),
        });
    }
    let eig = SymmetricEigen::new(hermitian_part(m));
    let mut order: Vec<usize> = (0..m.nrows()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    Ok(HermitianEigen {
        values: order.iter().map(|&k| eig.eigenvalues[k]).collect(),
        vectors: order
            .iter()
            .map(|&k| eig.eigenvectors.column(k).into_owned())
            .collect(),
    })
}

/// exp(M) by scaling and squaring with a Padé approximant.
pub fn matrix_exponential(m: &ComplexMatrix) -> ComplexMatrix {
    m.exp()
}

/// Multiplies `v` by the phase that makes its largest-magnitude component
/// real and positive.
pub fn fix_phase(v: &mut StateVector) {
    let Some(pivot) = v.iter().copied().max_by(|a, b| a.norm().total_cmp(&b.norm())) else {
        return;
    };
    if pivot.norm() > 0.0 {
        let phase = pivot.conj() / pivot.norm();
        v.iter_mut().for_each(|z| *z *= phase);
    }
}

/// Orthonormal Hilbert–Schmidt basis of n×n matrices built from the
/// generalized Gell-Mann matrices.
#[derive(Debug, Clone)]
pub struct OperatorBasis {
    pub dim: usize,
    pub elements: Vec<ComplexMatrix>,
}

impl OperatorBasis {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Coefficients `Tr(τ_i† M)`.
    pub fn coefficients(&self, m: &ComplexMatrix) -> Vec<Complex64> {
        self.elements
            .iter()
            .map(|tau| hs_inner(tau, m))
            .collect()
    }

    /// Σ_i x_i τ_i over the traceless elements (x indexed from τ_1).
    pub fn combine_traceless(&self, coeffs: &[Complex64]) -> ComplexMatrix {
        let mut m = zeros(self.dim);
        for (x, tau) in coeffs.iter().zip(&self.elements[1..]) {
            m += tau * *x;
        }
        m
    }
}

/// Hilbert–Schmidt product Tr(A† B).
pub fn hs_inner(a: &ComplexMatrix, b: &ComplexMatrix) -> Complex64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// Builds τ_0 = 𝟙/√n followed by the n²-1 generalized Gell-Mann matrices
/// divided by √2.
///
/// Ordering goes level by level: for k = 1..n-1, the symmetric and
/// antisymmetric pair (j, k) for each j < k, then the k-th diagonal element.
/// For n = 2 this is the Pauli order, for n = 3 the standard Gell-Mann
/// order λ_1..λ_8.
pub fn build_generalized_gellmann_basis(n: usize) -> Result<OperatorBasis> {
    if !(2..=MAX_DIM).contains(&n) {
        return Err(Error::InvalidDimension(n));
    }
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut elements = Vec::with_capacity(n * n);
    elements.push(identity(n).scale(1.0 / (n as f64).sqrt()));
    for k in 1..n {
        for j in 0..k {
            let mut sym = zeros(n);
            sym[(j, k)] = real(s);
            sym[(k, j)] = real(s);
            elements.push(sym);

            let mut anti = zeros(n);
            anti[(j, k)] = c64(0.0, -s);
            anti[(k, j)] = c64(0.0, s);
            elements.push(anti);
        }
        let norm = (1.0 / ((k * (k + 1)) as f64)).sqrt();
        let mut diag = zeros(n);
        for j in 0..k {
            diag[(j, j)] = real(norm);
        }
        diag[(k, k)] = real(-(k as f64) * norm);
        elements.push(diag);
    }
    Ok(OperatorBasis { dim: n, elements })
}

/// Pauli matrices (σ_x, σ_y, σ_z) with σ_z = diag(1, -1).
pub fn pauli() -> [ComplexMatrix; 3] {
    let sx = from_rows(&[vec![ZERO, ONE], vec![ONE, ZERO]]);
    let sy = from_rows(&[vec![ZERO, -I], vec![I, ZERO]]);
    let sz = from_rows(&[vec![ONE, ZERO], vec![ZERO, -ONE]]);
    [sx, sy, sz]
}

/// Haar-random pure state from a normalized complex Gaussian vector.
pub fn haar_random_state<R: Rng + ?Sized>(n: usize, rng: &mut R) -> StateVector {
    loop {
        let v = gaussian_vector(n, rng);
        if let Ok(psi) = normalize(&v) {
            return psi;
        }
    }
}

/// Haar-random orthonormal pair (first two columns of a random unitary).
pub fn haar_random_pair<R: Rng + ?Sized>(n: usize, rng: &mut R) -> (StateVector, StateVector) {
    let u = haar_random_state(n, rng);
    loop {
        let g = gaussian_vector(n, rng);
        let w = &g - &u * u.dotc(&g);
        if let Ok(v) = normalize(&w) {
            return (u, v);
        }
    }
}

/// Haar-random unitary: Gram–Schmidt on complex Gaussian columns.
pub fn haar_random_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexMatrix {
    let mut cols: Vec<StateVector> = Vec::with_capacity(n);
    while cols.len() < n {
        let mut w = gaussian_vector(n, rng);
        for q in &cols {
            w -= q * q.dotc(&w);
        }
        if let Ok(q) = normalize(&w) {
            cols.push(q);
        }
    }
    ComplexMatrix::from_columns(&cols)
}

/// Random Hermitian matrix (A + A†)/2 with standard complex Gaussian A.
pub fn random_hermitian<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexMatrix {
    let a = ComplexMatrix::from_fn(n, n, |_, _| gaussian(rng));
    hermitian_part(&a)
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    c64(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

fn gaussian_vector<R: Rng + ?Sized>(n: usize, rng: &mut R) -> StateVector {
    StateVector::from_fn(n, |_, _| gaussian(rng))
}
