// Copyright 2026 The posqsd Authors
// SPDX-License-Identifier: Apache-2.0

//! Deterministic reference solutions of dρ/dt = G[ρ].

use std::io::Write;

use crate::error::{Error, Result};
use crate::generator::Dynamics;
use crate::matrix::{
    self, frobenius_norm, hermitian_eigendecomposition, hermitian_part, ComplexMatrix, StateVector,
};

const DENSITY_TOLERANCE: f64 = 1e-10;

/// Hermitian, unit-trace matrix. Positivity is deliberately not enforced.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(ComplexMatrix);

impl DensityMatrix {
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        if !m.is_square() || m.nrows() == 0 {
            return Err(Error::InvalidDimension(m.nrows()));
        }
        let defect = matrix::hermiticity_defect(&m);
        if defect > DENSITY_TOLERANCE {
            return Err(Error::NonHermitianInput { defect });
        }
        let tr = matrix::trace(&m);
        if (tr.re - 1.0).abs() > DENSITY_TOLERANCE || tr.im.abs() > DENSITY_TOLERANCE {
            return Err(Error::Config(format!("density matrix trace is {tr}, expected 1")));
        }
        Ok(Self(m))
    }

    /// Wraps without checking; for series whose trace drift is tracked
    /// separately.
    pub(crate) fn new_unchecked(m: ComplexMatrix) -> Self {
        Self(m)
    }

    pub fn pure(psi: &StateVector) -> Result<Self> {
        matrix::ensure_normalized(psi)?;
        Ok(Self(matrix::projector(psi)))
    }

    pub fn maximally_mixed(n: usize) -> Self {
        Self(matrix::identity(n).unscale(n as f64))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_inner(self) -> ComplexMatrix {
        self.0
    }

    pub fn population(&self, i: usize) -> f64 {
        self.0[(i, i)].re
    }

    pub fn min_eigenvalue(&self) -> f64 {
        hermitian_eigendecomposition(&hermitian_part(&self.0))
            .map(|e| e.values[e.values.len() - 1])
            .unwrap_or(f64::NAN)
    }
}

#[derive(Debug, Clone)]
pub struct MeSolution {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
    pub min_eigenvalues: Vec<f64>,
}

impl MeSolution {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn max_trace_drift(&self) -> f64 {
        self.states
            .iter()
            .map(|r| (matrix::trace(r.matrix()) - matrix::ONE).norm())
            .fold(0.0, f64::max)
    }

    /// Header `t, rho_11_re, rho_11_im, …, rho_nn_im, min_eigenvalue`.
    pub fn csv_header(n: usize) -> Vec<String> {
        let mut h = vec!["t".to_string()];
        for i in 1..=n {
            for j in 1..=n {
                h.push(format!("rho_{i}{j}_re"));
                h.push(format!("rho_{i}{j}_im"));
            }
        }
        h.push("min_eigenvalue".into());
        h
    }

    /// `time_scale` multiplies the time column only.
    pub fn write_csv<W: Write>(&self, out: W, time_scale: f64) -> Result<()> {
        let n = self.states.first().map_or(0, DensityMatrix::dim);
        let mut w = csv::Writer::from_writer(out);
        w.write_record(Self::csv_header(n))?;
        for ((t, rho), min_eig) in self.times.iter().zip(&self.states).zip(&self.min_eigenvalues) {
            let mut row = vec![format!("{}", t * time_scale)];
            for i in 0..n {
                for j in 0..n {
                    let z = rho.matrix()[(i, j)];
                    row.push(format!("{}", z.re));
                    row.push(format!("{}", z.im));
                }
            }
            row.push(format!("{min_eig}"));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Fixed-step classical RK4, every step recorded.
pub fn solve_me<D: Dynamics + ?Sized>(
    dynamics: &D,
    rho0: &DensityMatrix,
    dt: f64,
    t_final: f64,
) -> Result<MeSolution> {
    solve_me_strided(dynamics, rho0, dt, t_final, 1)
}

/// As [`solve_me`], keeping every `stride`-th step; the grid matches
/// trajectories run with the same dt and stride.
pub fn solve_me_strided<D: Dynamics + ?Sized>(
    dynamics: &D,
    rho0: &DensityMatrix,
    dt: f64,
    t_final: f64,
    stride: usize,
) -> Result<MeSolution> {
    if rho0.dim() != dynamics.dim() {
        return Err(Error::DimensionMismatch {
            expected: dynamics.dim(),
            found: rho0.dim(),
        });
    }
    if !(dt > 0.0 && t_final >= dt && t_final.is_finite()) {
        return Err(Error::Config(format!("invalid grid dt = {dt}, t_final = {t_final}")));
    }
    if stride == 0 {
        return Err(Error::Config("sample stride must be >= 1".into()));
    }
    let n_steps = (t_final / dt).round() as usize;
    let g = |t: f64, rho: &ComplexMatrix| dynamics.generator_at(t).apply(rho);

    let mut rho = rho0.matrix().clone();
    let mut sol = MeSolution {
        times: vec![0.0],
        states: vec![rho0.clone()],
        min_eigenvalues: vec![rho0.min_eigenvalue()],
    };
    for k in 0..n_steps {
        let t = k as f64 * dt;
        let k1 = g(t, &rho)?;
        let k2 = g(t + 0.5 * dt, &(&rho + k1.scale(0.5 * dt)))?;
        let k3 = g(t + 0.5 * dt, &(&rho + k2.scale(0.5 * dt)))?;
        let k4 = g(t + dt, &(&rho + k3.scale(dt)))?;
        rho += (k1 + (k2 + k3).scale(2.0) + k4).scale(dt / 6.0);
        rho = hermitian_part(&rho);
        if (k + 1) % stride == 0 {
            let state = DensityMatrix::new_unchecked(rho.clone());
            sol.times.push((k + 1) as f64 * dt);
            sol.min_eigenvalues.push(state.min_eigenvalue());
            sol.states.push(state);
        }
    }
    Ok(sol)
}

/// Exact solution for the qubit model with rates (1, 1, -1) on the Pauli
/// matrices: Bloch vector (x, y, z) ↦ (x, y, z e^{-4t}).
pub fn qubit_closed_form(rho0: &DensityMatrix, t: f64) -> Result<DensityMatrix> {
    if rho0.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: rho0.dim(),
        });
    }
    let [sx, sy, sz] = matrix::pauli();
    let bloch = |s: &ComplexMatrix| matrix::trace(&(s * rho0.matrix())).re;
    let (x, y, z) = (bloch(&sx), bloch(&sy), bloch(&sz));
    let m = (matrix::identity(2) + sx.scale(x) + sy.scale(y) + sz.scale(z * (-4.0 * t).exp())).scale(0.5);
    Ok(DensityMatrix(m))
}

/// Largest entrywise modulus of the difference.
pub fn max_entry_error(a: &DensityMatrix, b: &DensityMatrix) -> f64 {
    (a.matrix() - b.matrix()).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Frobenius distance.
pub fn distance(a: &DensityMatrix, b: &DensityMatrix) -> f64 {
    frobenius_norm(&(a.matrix() - b.matrix()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::DiagonalGenerator;
    use crate::matrix::{c64, real};
    use crate::models::{self, SecularApproximation};

    fn qubit() -> DiagonalGenerator {
        models::qubit_model().diagonal().unwrap()
    }

    fn bloch_state(x: f64, y: f64, z: f64) -> DensityMatrix {
        let [sx, sy, sz] = matrix::pauli();
        DensityMatrix::new((matrix::identity(2) + sx.scale(x) + sy.scale(y) + sz.scale(z)).scale(0.5)).unwrap()
    }

    #[test]
    fn rejects_invalid_density_matrices() {
        assert!(DensityMatrix::new(matrix::identity(2)).is_err());
        let mut m = matrix::identity(2).scale(0.5);
        m[(0, 1)] = c64(0.0, 0.1);
        assert!(DensityMatrix::new(m).is_err());
        // Negative eigenvalues are allowed.
        let neg = DensityMatrix::new(models::diag(&[1.5, -0.5])).unwrap();
        assert!((neg.min_eigenvalue() + 0.5).abs() < 1e-14);
    }

    #[test]
    fn zero_generator_is_constant() {
        let rho = bloch_state(0.3, -0.2, 0.5);
        let sol = solve_me(&DiagonalGenerator::zero(2), &rho, 0.01, 1.0).unwrap();
        assert_eq!(sol.len(), 101);
        assert!(sol.states.iter().all(|r| r == &rho));
    }

    #[test]
    fn closed_form_examples() {
        let mixed = DensityMatrix::maximally_mixed(2);
        assert!(max_entry_error(&qubit_closed_form(&mixed, 3.0).unwrap(), &mixed) < 1e-16);

        let ground = DensityMatrix::pure(&matrix::basis_state(2, 0)).unwrap();
        let r = qubit_closed_form(&ground, 0.25).unwrap();
        let z = (-1f64).exp();
        assert!((r.population(0) - (1.0 + z) / 2.0).abs() < 1e-15);
        assert!(r.min_eigenvalue() >= 0.0);

        let xs = bloch_state(1.0, 0.0, 0.0);
        assert!(max_entry_error(&qubit_closed_form(&xs, 7.0).unwrap(), &xs) < 1e-16);

        assert!(qubit_closed_form(&DensityMatrix::maximally_mixed(3), 1.0).is_err());
    }

    #[test]
    fn rk4_matches_qubit_closed_form() {
        let rho0 = bloch_state(0.4, -0.3, 0.8);
        let sol = solve_me(&qubit(), &rho0, 1e-3, 2.0).unwrap();
        let worst = sol
            .times
            .iter()
            .zip(&sol.states)
            .map(|(&t, r)| max_entry_error(r, &qubit_closed_form(&rho0, t).unwrap()))
            .fold(0.0, f64::max);
        assert!(worst <= 1e-8, "{worst}");
        assert!(sol.max_trace_drift() <= 1e-9);
    }

    #[test]
    fn rk4_is_fourth_order() {
        let rho0 = bloch_state(0.0, 0.0, 1.0);
        let err = |dt: f64| {
            let sol = solve_me(&qubit(), &rho0, dt, 1.0).unwrap();
            max_entry_error(sol.states.last().unwrap(), &qubit_closed_form(&rho0, 1.0).unwrap())
        };
        let ratio = err(0.1) / err(0.025);
        assert!((128.0..=512.0).contains(&ratio), "{ratio}");
    }

    #[test]
    fn strided_grid_matches_trajectory_grid() {
        let rho0 = DensityMatrix::pure(&matrix::basis_state(2, 0)).unwrap();
        let sol = solve_me_strided(&qubit(), &rho0, 1e-3, 1.0, 50).unwrap();
        assert_eq!(sol.len(), 21);
        assert!((sol.times[20] - 1.0).abs() < 1e-15);
        let cfg = crate::unraveling::SdeConfig::new(1e-3, 1.0, crate::unraveling::UnravelingMode::Gtro, 0)
            .with_stride(50);
        assert_eq!(cfg.sample_times(), sol.times);
    }

    #[test]
    fn dimer_full_and_partial_differ() {
        let rho0 = DensityMatrix::pure(&matrix::basis_state(3, 1)).unwrap();
        let run = |v| {
            let gen = models::dimer_model(v).diagonal().unwrap();
            solve_me_strided(&gen, &rho0, 1e-5, 0.2, 100).unwrap()
        };
        let partial = run(SecularApproximation::Partial);
        let full = run(SecularApproximation::Full);
        assert!(partial.max_trace_drift() < 1e-9);
        assert!(partial.min_eigenvalues.iter().all(|&e| e >= -1e-9));
        // Full SA never builds the site coherence from populations.
        assert!(full.states.iter().all(|r| r.matrix()[(0, 1)].norm() < 1e-12));
        let max_coh = partial.states.iter().map(|r| r.matrix()[(0, 1)].norm()).fold(0.0, f64::max);
        assert!(max_coh > 1e-3, "{max_coh}");
        let gap = partial
            .states
            .iter()
            .zip(&full.states)
            .map(|(p, f)| (p.population(0) - f.population(0)).abs())
            .fold(0.0, f64::max);
        assert!(gap > 1e-3, "{gap}");
    }

    #[test]
    fn csv_layout() {
        let rho0 = DensityMatrix::pure(&StateVector::from_vec(vec![real(1.0), real(0.0)])).unwrap();
        let sol = solve_me_strided(&qubit(), &rho0, 0.1, 0.2, 1).unwrap();
        let mut buf = Vec::new();
        sol.write_csv(&mut buf, 2.0).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "t,rho_11_re,rho_11_im,rho_12_re,rho_12_im,rho_21_re,rho_21_im,rho_22_re,rho_22_im,min_eigenvalue"
        );
        assert!(lines.nth(2).unwrap().starts_with("0.4,"));
    }
}
