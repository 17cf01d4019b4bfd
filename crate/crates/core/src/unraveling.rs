// Copyright 2026 The posqsd Authors
// SPDX-License-Identifier: Apache-2.0

//! Single quantum trajectories of the diffusive unraveling
//!
//! ```text
//! |dψ⟩ = A_ψ|ψ⟩ dt + Σ_k B_{ψ,k}|ψ⟩ dξ_k
//! ```
//!
//! with the drift A_ψ shared by both modes and the noise operators taken
//! either from the spectral decomposition of the GTRO (positive dynamics) or
//! directly from the Lindblad channels (standard QSD, non-negative rates only).
//!
//! Integration is the normalized exponential Euler step
//! ψ ← normalize(exp(A_ψ dt + Σ_k B_k dξ_k) ψ), with the Hamiltonian counted
//! once, inside A_ψ.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generator::{DiagonalGenerator, Dynamics};
use crate::matrix::{self, ensure_normalized, matrix_exponential, ComplexMatrix, StateVector, I};
use crate::positivity::{decompose_gtro, gtro_unchecked};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnravelingMode {
    /// Noise from the eigen-decomposition of the GTRO; valid for any
    /// positive generator.
    Gtro,
    /// B_j = √c_j (L_j - ℓ_j); needs c_j ≥ 0.
    StandardQsd,
}

impl fmt::Display for UnravelingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            UnravelingMode::Gtro => "gtro",
            UnravelingMode::StandardQsd => "standard_qsd",
        })
    }
}

impl FromStr for UnravelingMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gtro" => Ok(UnravelingMode::Gtro),
            "standard_qsd" => Ok(UnravelingMode::StandardQsd),
            _ => Err(Error::Config(format!("unknown mode `{s}`"))),
        }
    }
}

/// Complex Wiener increments dξ = √(dt/2)(g₁ + i g₂) for one step.
#[derive(Debug, Clone, PartialEq)]
pub struct WienerIncrementBlock {
    pub dt: f64,
    pub increments: Vec<Complex64>,
}

impl WienerIncrementBlock {
    pub fn sample<R: Rng + ?Sized>(dt: f64, count: usize, rng: &mut R) -> Self {
        let scale = (0.5 * dt).sqrt();
        let increments = (0..count)
            .map(|_| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                Complex64::new(re * scale, im * scale)
            })
            .collect();
        Self { dt, increments }
    }

    pub fn zero(dt: f64, count: usize) -> Self {
        Self {
            dt,
            increments: vec![matrix::ZERO; count],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SdeConfig {
    pub dt: f64,
    pub t_final: f64,
    pub mode: UnravelingMode,
    pub seed: u64,
    /// Keep every `sample_stride`-th state (the initial one included).
    pub sample_stride: usize,
}

impl SdeConfig {
    pub fn new(dt: f64, t_final: f64, mode: UnravelingMode, seed: u64) -> Self {
        Self {
            dt,
            t_final,
            mode,
            seed,
            sample_stride: 10,
        }
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.sample_stride = stride;
        self
    }

    pub fn n_steps(&self) -> usize {
        (self.t_final / self.dt).round() as usize
    }

    /// Sampled times k·dt for k a multiple of the stride.
    pub fn sample_times(&self) -> Vec<f64> {
        (0..=self.n_steps())
            .step_by(self.sample_stride.max(1))
            .map(|k| k as f64 * self.dt)
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_final >= self.dt && self.t_final.is_finite()) {
            return Err(Error::Config(format!(
                "t_final ({}) must be at least dt ({})",
                self.t_final, self.dt
            )));
        }
        if self.sample_stride == 0 {
            return Err(Error::Config("sample stride must be >= 1".into()));
        }
        Ok(())
    }
}

/// A_ψ = -iH - ½ Σ_j c_j (L_j†L_j - 2ℓ_j* L_j + |ℓ_j|²).
pub fn drift_operator(gen: &DiagonalGenerator, psi: &StateVector) -> Result<ComplexMatrix> {
    check_state(gen, psi)?;
    Ok(drift_unchecked(gen, psi))
}

fn drift_unchecked(gen: &DiagonalGenerator, psi: &StateVector) -> ComplexMatrix {
    let n = gen.dim();
    let mut a = &gen.hamiltonian * (-I);
    for (c, l) in gen.channels() {
        if c == 0.0 {
            continue;
        }
        let ell = psi.dotc(&(l * psi));
        let mut term = l.adjoint() * l - l * (ell.conj() * 2.0);
        for i in 0..n {
            term[(i, i)] += ell.norm_sqr();
        }
        a -= term.scale(0.5 * c);
    }
    a
}

/// B_k = √λ_k |φ_k⟩⟨ψ| from the GTRO eigenpairs, at most n-1 of them.
pub fn noise_operators_gtro(gen: &DiagonalGenerator, psi: &StateVector) -> Result<Vec<ComplexMatrix>> {
    check_state(gen, psi)?;
    let w = gtro_unchecked(gen, psi);
    Ok(decompose_gtro(&w, psi)?.noise_operators())
}

/// B_j = √c_j (L_j - ℓ_j), one per channel.
pub fn noise_operators_standard(
    gen: &DiagonalGenerator,
    psi: &StateVector,
) -> Result<Vec<ComplexMatrix>> {
    check_state(gen, psi)?;
    standard_unchecked(gen, psi)
}

fn standard_unchecked(gen: &DiagonalGenerator, psi: &StateVector) -> Result<Vec<ComplexMatrix>> {
    let n = gen.dim();
    let tol = 1e-10 * gen.max_abs_rate().max(1.0);
    gen.channels()
        .enumerate()
        .map(|(j, (c, l))| {
            if c < -tol {
                return Err(Error::NegativeRate { channel: j, rate: c });
            }
            let ell = psi.dotc(&(l * psi));
            Ok((l - matrix::identity(n) * ell).scale(c.max(0.0).sqrt()))
        })
        .collect()
}

fn check_state(gen: &DiagonalGenerator, psi: &StateVector) -> Result<()> {
    if psi.len() != gen.dim() {
        return Err(Error::DimensionMismatch {
            expected: gen.dim(),
            found: psi.len(),
        });
    }
    ensure_normalized(psi)
}

/// Number of Wiener increments drawn per step. GTRO mode always draws n-1 so
/// the random stream does not depend on how many channels survive.
pub fn increments_per_step(gen: &DiagonalGenerator, mode: UnravelingMode) -> usize {
    match mode {
        UnravelingMode::Gtro => gen.dim().saturating_sub(1),
        UnravelingMode::StandardQsd => gen.n_channels(),
    }
}

/// One step ψ → normalize(exp(A_ψ dt + Σ_k B_k dξ_k) ψ). Increments beyond
/// the number of retained channels are ignored.
pub fn sde_step(
    gen: &DiagonalGenerator,
    psi: &StateVector,
    dt: f64,
    noise: &WienerIncrementBlock,
    mode: UnravelingMode,
) -> Result<StateVector> {
    check_state(gen, psi)?;
    step_unchecked(gen, psi, dt, noise, mode)
}

fn step_unchecked(
    gen: &DiagonalGenerator,
    psi: &StateVector,
    dt: f64,
    noise: &WienerIncrementBlock,
    mode: UnravelingMode,
) -> Result<StateVector> {
    let mut exponent = drift_unchecked(gen, psi).scale(dt);
    match mode {
        UnravelingMode::Gtro => {
            let w = gtro_unchecked(gen, psi);
            let dec = decompose_gtro(&w, psi)?;
            for ((lambda, phi), dxi) in dec.channels.iter().zip(&noise.increments) {
                // √λ |φ⟩⟨ψ| dξ
                exponent += (phi * psi.adjoint()) * (dxi * lambda.sqrt());
            }
        }
        UnravelingMode::StandardQsd => {
            for (b, dxi) in standard_unchecked(gen, psi)?.iter().zip(&noise.increments) {
                exponent += b * *dxi;
            }
        }
    }
    let next = matrix_exponential(&exponent) * psi;
    matrix::normalize(&next)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub traj_id: usize,
    pub t: f64,
    pub amplitudes: Vec<[f64; 2]>,
}

#[derive(Debug, Clone)]
pub struct Abort {
    pub time: f64,
    pub min_eigenvalue: f64,
    pub state: StateVector,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<StateVector>,
    pub rng_seed: u64,
    pub aborted_at: Option<Abort>,
}

impl Trajectory {
    pub fn is_complete(&self) -> bool {
        self.aborted_at.is_none()
    }

    /// One JSON object per stored time:
    /// `{"traj_id": …, "t": …, "amplitudes": [[re, im], …]}`.
    pub fn write_jsonl<W: Write>(&self, traj_id: usize, out: &mut W, time_scale: f64) -> Result<()> {
        for (t, psi) in self.times.iter().zip(&self.states) {
            let record = TrajectoryRecord {
                traj_id,
                t: t * time_scale,
                amplitudes: psi.iter().map(|z| [z.re, z.im]).collect(),
            };
            serde_json::to_writer(&mut *out, &record)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    /// Populations |⟨i|ψ_t⟩|² at every stored time.
    pub fn populations(&self) -> Vec<Vec<f64>> {
        self.states
            .iter()
            .map(|s| s.iter().map(|z| z.norm_sqr()).collect())
            .collect()
    }
}

/// Integrates one trajectory on the uniform grid k·dt. Time-dependent
/// generators are sampled at the left end of each step. A positivity
/// violation stops the trajectory and is recorded in `aborted_at`.
pub fn run_trajectory<D: Dynamics + ?Sized>(
    dynamics: &D,
    psi0: &StateVector,
    cfg: &SdeConfig,
) -> Result<Trajectory> {
    cfg.validate()?;
    if psi0.len() != dynamics.dim() {
        return Err(Error::DimensionMismatch {
            expected: dynamics.dim(),
            found: psi0.len(),
        });
    }
    ensure_normalized(psi0)?;
    if cfg.mode == UnravelingMode::StandardQsd {
        let g = dynamics.generator_at(0.0);
        if !g.has_nonnegative_rates() {
            let (channel, rate) = g
                .rates
                .iter()
                .copied()
                .enumerate()
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .unwrap_or((0, 0.0));
            return Err(Error::NegativeRate { channel, rate });
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n_steps = cfg.n_steps();
    let stride = cfg.sample_stride;
    let mut psi = matrix::normalize(psi0)?;
    let mut times = vec![0.0];
    let mut states = vec![psi.clone()];
    let mut aborted_at = None;

    for k in 0..n_steps {
        let t = k as f64 * cfg.dt;
        let gen = dynamics.generator_at(t);
        let noise = WienerIncrementBlock::sample(cfg.dt, increments_per_step(&gen, cfg.mode), &mut rng);
        match step_unchecked(&gen, &psi, cfg.dt, &noise, cfg.mode) {
            Ok(next) => psi = next,
            Err(Error::PositivityViolation {
                min_eigenvalue,
                state,
            }) => {
                aborted_at = Some(Abort {
                    time: t,
                    min_eigenvalue,
                    state,
                });
                break;
            }
            Err(e) => return Err(e),
        }
        if (k + 1) % stride == 0 {
            times.push((k + 1) as f64 * cfg.dt);
            states.push(psi.clone());
        }
    }

    Ok(Trajectory {
        times,
        states,
        rng_seed: cfg.seed,
        aborted_at,
    })
}
