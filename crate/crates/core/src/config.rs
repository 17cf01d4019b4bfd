// Copyright 2026 The posqsd Authors
// SPDX-License-Identifier: Apache-2.0

//! JSON generator files. Complex numbers are `[re, im]` pairs and matrices
//! are lists of rows. Exactly one of `redfield_tensor`, `nondiagonal` or
//! `diagonal` must be present; see `docs/generator.schema.json`.

use std::fs;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generator::{
    nondiagonal_to_diagonal, redfield_to_diagonal, DiagonalGenerator, NonDiagonalGenerator,
    RedfieldTensor,
};
use crate::matrix::{ComplexMatrix, MAX_DIM};

pub type JsonComplex = [f64; 2];
pub type JsonMatrix = Vec<Vec<JsonComplex>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NondiagonalSpec {
    pub hamiltonian: JsonMatrix,
    /// Coefficients in the traceless generalized Gell-Mann basis,
    /// (n²-1) × (n²-1).
    pub d_matrix: JsonMatrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagonalSpec {
    pub hamiltonian: JsonMatrix,
    pub rates: Vec<f64>,
    pub lindblad_ops: Vec<JsonMatrix>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorFile {
    pub dim: usize,
    /// n⁴ entries R_{ij;kl}, row-major in (i, j, k, l).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub redfield_tensor: Option<Vec<JsonComplex>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nondiagonal: Option<NondiagonalSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagonal: Option<DiagonalSpec>,
}

fn to_complex(z: &JsonComplex) -> Complex64 {
    Complex64::new(z[0], z[1])
}

fn to_json_complex(z: &Complex64) -> JsonComplex {
    [z.re, z.im]
}

pub fn matrix_from_json(rows: &JsonMatrix, n: usize, what: &str) -> Result<ComplexMatrix> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(Error::Config(format!("`{what}` must be a {n}×{n} matrix")));
    }
    Ok(ComplexMatrix::from_fn(n, n, |i, j| to_complex(&rows[i][j])))
}

pub fn matrix_to_json(m: &ComplexMatrix) -> JsonMatrix {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| to_json_complex(&m[(i, j)])).collect())
        .collect()
}

impl GeneratorFile {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: Self = serde_json::from_str(text)?;
        file.validate_shape()?;
        Ok(file)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&fs::read_to_string(path)?)
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_json_string()? + "\n")?;
        Ok(())
    }

    fn validate_shape(&self) -> Result<()> {
        if self.dim < 2 || self.dim > MAX_DIM {
            return Err(Error::InvalidDimension(self.dim));
        }
        let present = [
            self.redfield_tensor.is_some(),
            self.nondiagonal.is_some(),
            self.diagonal.is_some(),
        ]
        .iter()
        .filter(|&&p| p)
        .count();
        if present != 1 {
            return Err(Error::Config(
                "exactly one of `redfield_tensor`, `nondiagonal`, `diagonal` is required".into(),
            ));
        }
        Ok(())
    }

    pub fn from_diagonal(gen: &DiagonalGenerator) -> Self {
        Self {
            dim: gen.dim(),
            redfield_tensor: None,
            nondiagonal: None,
            diagonal: Some(DiagonalSpec {
                hamiltonian: matrix_to_json(&gen.hamiltonian),
                rates: gen.rates.clone(),
                lindblad_ops: gen.lindblad_ops.iter().map(matrix_to_json).collect(),
            }),
        }
    }

    pub fn from_redfield(tensor: &RedfieldTensor) -> Self {
        Self {
            dim: tensor.dim(),
            redfield_tensor: Some(tensor.as_flat().iter().map(to_json_complex).collect()),
            nondiagonal: None,
            diagonal: None,
        }
    }

    pub fn from_nondiagonal(gen: &NonDiagonalGenerator) -> Self {
        Self {
            dim: gen.dim(),
            redfield_tensor: None,
            nondiagonal: Some(NondiagonalSpec {
                hamiltonian: matrix_to_json(&gen.hamiltonian),
                d_matrix: matrix_to_json(&gen.kossakowski),
            }),
            diagonal: None,
        }
    }

    /// Builds the diagonal form, converting when the file holds Redfield or
    /// non-diagonal coefficients.
    pub fn to_generator(&self) -> Result<DiagonalGenerator> {
        self.validate_shape()?;
        let n = self.dim;
        if let Some(flat) = &self.redfield_tensor {
            let tensor = RedfieldTensor::from_flat(n, flat.iter().map(to_complex).collect())?;
            return redfield_to_diagonal(&tensor);
        }
        if let Some(nd) = &self.nondiagonal {
            let h = matrix_from_json(&nd.hamiltonian, n, "hamiltonian")?;
            let m = n * n - 1;
            let d = matrix_from_json(&nd.d_matrix, m, "d_matrix")?;
            return nondiagonal_to_diagonal(&NonDiagonalGenerator::new(h, d)?);
        }
        let spec = self.diagonal.as_ref().expect("shape validated");
        if spec.rates.len() != spec.lindblad_ops.len() {
            return Err(Error::Config(format!(
                "{} rates but {} Lindblad operators",
                spec.rates.len(),
                spec.lindblad_ops.len()
            )));
        }
        let h = matrix_from_json(&spec.hamiltonian, n, "hamiltonian")?;
        let ops = spec
            .lindblad_ops
            .iter()
            .enumerate()
            .map(|(k, l)| matrix_from_json(l, n, &format!("lindblad_ops[{k}]")))
            .collect::<Result<Vec<_>>>()?;
        DiagonalGenerator::new(h, spec.rates.clone(), ops)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::redfield_to_nondiagonal;
    use crate::matrix::frobenius_norm;
    use crate::models::{self, SecularApproximation};

    fn same_action(a: &DiagonalGenerator, b: &DiagonalGenerator) -> f64 {
        let n = a.dim();
        let mut worst: f64 = 0.0;
        for k in 0..n {
            for l in 0..n {
                let mut e = crate::matrix::zeros(n);
                e[(k, l)] = crate::matrix::ONE;
                worst = worst.max(frobenius_norm(&(a.apply(&e).unwrap() - b.apply(&e).unwrap())));
            }
        }
        worst
    }

    #[test]
    fn diagonal_roundtrip() {
        let gen = models::qubit_model().diagonal().unwrap();
        let text = GeneratorFile::from_diagonal(&gen).to_json_string().unwrap();
        let back = GeneratorFile::from_json_str(&text).unwrap().to_generator().unwrap();
        assert_eq!(back, gen);
    }

    #[test]
    fn redfield_and_nondiagonal_roundtrip() {
        let tensor = models::dimer_redfield(SecularApproximation::Partial);
        let reference = redfield_to_diagonal(&tensor).unwrap();
        let text = GeneratorFile::from_redfield(&tensor).to_json_string().unwrap();
        let back = GeneratorFile::from_json_str(&text).unwrap().to_generator().unwrap();
        assert!(same_action(&back, &reference) < 1e-9);

        let nd = redfield_to_nondiagonal(&tensor).unwrap();
        let text = GeneratorFile::from_nondiagonal(&nd).to_json_string().unwrap();
        let back = GeneratorFile::from_json_str(&text).unwrap().to_generator().unwrap();
        assert!(same_action(&back, &reference) < 1e-9);
    }

    #[test]
    fn hand_written_file() {
        let text = r#"{
            "dim": 2,
            "diagonal": {
                "hamiltonian": [[[0, 0], [0, 0]], [[0, 0], [0, 0]]],
                "rates": [0.5],
                "lindblad_ops": [[[[0, 0], [1, 0]], [[0, 0], [0, 0]]]]
            }
        }"#;
        let gen = GeneratorFile::from_json_str(text).unwrap().to_generator().unwrap();
        assert_eq!(gen.rates, vec![0.5]);
        assert_eq!(gen.lindblad_ops[0][(0, 1)], crate::matrix::ONE);
    }

    #[test]
    fn malformed_files_are_rejected() {
        let both = r#"{"dim": 2, "redfield_tensor": [], "diagonal": {"hamiltonian": [], "rates": [], "lindblad_ops": []}}"#;
        assert!(matches!(GeneratorFile::from_json_str(both), Err(Error::Config(_))));
        let none = r#"{"dim": 2}"#;
        assert!(matches!(GeneratorFile::from_json_str(none), Err(Error::Config(_))));
        let unknown = r#"{"dim": 2, "rates": []}"#;
        assert!(matches!(GeneratorFile::from_json_str(unknown), Err(Error::Json(_))));
        let short = r#"{"dim": 2, "redfield_tensor": [[0, 0]]}"#;
        assert!(GeneratorFile::from_json_str(short).unwrap().to_generator().is_err());
        let bad_h = r#"{"dim": 2, "diagonal": {"hamiltonian": [[[0, 0]]], "rates": [], "lindblad_ops": []}}"#;
        assert!(GeneratorFile::from_json_str(bad_h).unwrap().to_generator().is_err());
        assert!(matches!(
            GeneratorFile::from_json_str(r#"{"dim": 1, "redfield_tensor": []}"#),
            Err(Error::InvalidDimension(1))
        ));
    }

    #[test]
    fn load_and_save() {
        let dir = std::env::temp_dir().join(format!("posqsd-config-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("gen.json");
        let file = GeneratorFile::from_redfield(&models::dimer_redfield(SecularApproximation::Full));
        file.save(&path).unwrap();
        assert_eq!(GeneratorFile::load(&path).unwrap(), file);
        assert!(matches!(GeneratorFile::load(dir.join("missing.json")), Err(Error::Io(_))));
        fs::remove_dir_all(dir).unwrap();
    }
}
