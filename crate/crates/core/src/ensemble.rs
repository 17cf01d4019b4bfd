// Copyright 2026 The posqsd Authors
// SPDX-License-Identifier: Apache-2.0

//! Parallel trajectory ensembles and their comparison with the ME oracle.
//!
//! Trajectory `i` is seeded with `mix_seed(cfg.seed, i)` and results are
//! folded in index order, so statistics do not depend on the worker count.

use std::fmt;
use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::generator::Dynamics;
use crate::matrix::{self, ComplexMatrix, StateVector};
use crate::oracle::{DensityMatrix, MeSolution};
use crate::rng::mix_seed;
use crate::unraveling::{run_trajectory, Abort, SdeConfig};

/// Trajectories integrated per parallel batch before being folded.
const BATCH: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Observable {
    Population(usize),
    CoherenceRe(usize, usize),
    CoherenceIm(usize, usize),
}

impl Observable {
    /// Populations first, then Re/Im of ρ_ij for i < j, row by row.
    pub fn all(n: usize) -> Vec<Observable> {
        let mut out: Vec<_> = (0..n).map(Observable::Population).collect();
        for i in 0..n {
            for j in i + 1..n {
                out.push(Observable::CoherenceRe(i, j));
                out.push(Observable::CoherenceIm(i, j));
            }
        }
        out
    }

    pub fn populations(n: usize) -> Vec<Observable> {
        (0..n).map(Observable::Population).collect()
    }

    pub fn index(&self, n: usize) -> usize {
        match *self {
            Observable::Population(i) => i,
            Observable::CoherenceRe(i, j) | Observable::CoherenceIm(i, j) => {
                // pairs preceding row i, then offset within the row
                let before = i * n - i * (i + 1) / 2;
                let pair = before + (j - i - 1);
                let im = matches!(self, Observable::CoherenceIm(..)) as usize;
                n + 2 * pair + im
            }
        }
    }

    pub fn evaluate(&self, rho: &ComplexMatrix) -> f64 {
        match *self {
            Observable::Population(i) => rho[(i, i)].re,
            Observable::CoherenceRe(i, j) => rho[(i, j)].re,
            Observable::CoherenceIm(i, j) => rho[(i, j)].im,
        }
    }
}

impl fmt::Display for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Observable::Population(i) => write!(f, "pop_{}", i + 1),
            Observable::CoherenceRe(i, j) => write!(f, "coh_{}{}_re", i + 1, j + 1),
            Observable::CoherenceIm(i, j) => write!(f, "coh_{}{}_im", i + 1, j + 1),
        }
    }
}

fn observables_of(psi: &StateVector, out: &mut [f64]) {
    let n = psi.len();
    for i in 0..n {
        out[i] = psi[i].norm_sqr();
    }
    let mut k = n;
    for i in 0..n {
        for j in i + 1..n {
            let z = psi[i] * psi[j].conj();
            out[k] = z.re;
            out[k + 1] = z.im;
            k += 2;
        }
    }
}

fn density_from_observables(n: usize, obs: &[f64]) -> ComplexMatrix {
    let mut rho = matrix::zeros(n);
    for i in 0..n {
        rho[(i, i)] = matrix::real(obs[i]);
    }
    let mut k = n;
    for i in 0..n {
        for j in i + 1..n {
            let z = matrix::c64(obs[k], obs[k + 1]);
            rho[(i, j)] = z;
            rho[(j, i)] = z.conj();
            k += 2;
        }
    }
    rho
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AbortPolicy {
    /// Drop aborted trajectories and count them.
    Exclude,
    /// Any abort is an error; used once positivity has been checked.
    Fail,
}

#[derive(Debug, Clone)]
pub struct EnsembleStats {
    pub times: Vec<f64>,
    pub mean_rho: Vec<DensityMatrix>,
    /// `[time][observable]` in [`Observable::all`] order.
    pub mean: Vec<Vec<f64>>,
    /// Sample standard deviation over √N; NaN when N = 1.
    pub stderr: Vec<Vec<f64>>,
    pub n_traj: usize,
    pub n_aborted: usize,
    pub first_abort: Option<(usize, Abort)>,
}

impl EnsembleStats {
    pub fn dim(&self) -> usize {
        self.mean_rho.first().map_or(0, DensityMatrix::dim)
    }

    pub fn n_completed(&self) -> usize {
        self.n_traj - self.n_aborted
    }

    pub fn observables(&self) -> Vec<Observable> {
        Observable::all(self.dim())
    }

    pub fn mean_of(&self, obs: Observable) -> Vec<f64> {
        let k = obs.index(self.dim());
        self.mean.iter().map(|row| row[k]).collect()
    }

    pub fn stderr_of(&self, obs: Observable) -> Vec<f64> {
        let k = obs.index(self.dim());
        self.stderr.iter().map(|row| row[k]).collect()
    }

    pub fn csv_header(n: usize) -> Vec<String> {
        let mut h = vec!["t".to_string()];
        for o in Observable::all(n) {
            h.push(format!("{o}_mean"));
            h.push(format!("{o}_stderr"));
        }
        h
    }

    /// One row per sampled time; `time_scale` multiplies the time column.
    pub fn write_csv<W: Write>(&self, out: W, time_scale: f64) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(Self::csv_header(self.dim()))?;
        for ((t, mean), se) in self.times.iter().zip(&self.mean).zip(&self.stderr) {
            let mut row = vec![format!("{}", t * time_scale)];
            for (m, s) in mean.iter().zip(se) {
                row.push(format!("{m}"));
                row.push(format!("{s}"));
            }
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Welford accumulator over `[time][observable]`.
struct Accumulator {
    count: usize,
    mean: Vec<f64>,
    m2: Vec<f64>,
    scratch: Vec<f64>,
    n_obs: usize,
}

impl Accumulator {
    fn new(n_times: usize, n_obs: usize) -> Self {
        Self {
            count: 0,
            mean: vec![0.0; n_times * n_obs],
            m2: vec![0.0; n_times * n_obs],
            scratch: vec![0.0; n_obs],
            n_obs,
        }
    }

    fn push(&mut self, states: &[StateVector]) {
        self.count += 1;
        let c = self.count as f64;
        for (t, psi) in states.iter().enumerate() {
            observables_of(psi, &mut self.scratch);
            let base = t * self.n_obs;
            for (k, &x) in self.scratch.iter().enumerate() {
                let delta = x - self.mean[base + k];
                self.mean[base + k] += delta / c;
                self.m2[base + k] += delta * (x - self.mean[base + k]);
            }
        }
    }
}

pub fn run_ensemble<D: Dynamics + ?Sized>(
    dynamics: &D,
    psi0: &StateVector,
    cfg: &SdeConfig,
    n_traj: usize,
    workers: usize,
    policy: AbortPolicy,
) -> Result<EnsembleStats> {
    if n_traj == 0 {
        return Err(Error::Config("n_traj must be >= 1".into()));
    }
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;

    let times = cfg.sample_times();
    let n = dynamics.dim();
    let mut acc = Accumulator::new(times.len(), n * n);
    let mut n_aborted = 0;
    let mut first_abort = None;

    for start in (0..n_traj).step_by(BATCH) {
        let end = (start + BATCH).min(n_traj);
        let batch: Vec<_> = pool.install(|| {
            (start..end)
                .into_par_iter()
                .map(|i| {
                    let traj_cfg = SdeConfig {
                        seed: mix_seed(cfg.seed, i as u64),
                        ..*cfg
                    };
                    run_trajectory(dynamics, psi0, &traj_cfg)
                })
                .collect()
        });
        for (offset, traj) in batch.into_iter().enumerate() {
            let traj = traj?;
            match traj.aborted_at {
                None => acc.push(&traj.states),
                Some(abort) => {
                    n_aborted += 1;
                    if first_abort.is_none() {
                        first_abort = Some((start + offset, abort));
                    }
                }
            }
        }
    }

    if let Some((_, abort)) = &first_abort {
        if policy == AbortPolicy::Fail {
            return Err(Error::UnexpectedAbort {
                n_aborted,
                time: abort.time,
                min_eigenvalue: abort.min_eigenvalue,
                witness: abort.state.clone(),
            });
        }
        if acc.count == 0 {
            return Err(Error::AllTrajectoriesAborted {
                n_traj,
                time: abort.time,
                min_eigenvalue: abort.min_eigenvalue,
                witness: abort.state.clone(),
            });
        }
    }

    let n_obs = n * n;
    let count = acc.count as f64;
    let mut mean = Vec::with_capacity(times.len());
    let mut stderr = Vec::with_capacity(times.len());
    let mut mean_rho = Vec::with_capacity(times.len());
    for t in 0..times.len() {
        let m = acc.mean[t * n_obs..(t + 1) * n_obs].to_vec();
        let se = acc.m2[t * n_obs..(t + 1) * n_obs]
            .iter()
            .map(|&m2| {
                if acc.count < 2 {
                    f64::NAN
                } else {
                    (m2.max(0.0) / (count - 1.0) / count).sqrt()
                }
            })
            .collect();
        mean_rho.push(DensityMatrix::new_unchecked(density_from_observables(n, &m)));
        mean.push(m);
        stderr.push(se);
    }

    Ok(EnsembleStats {
        times,
        mean_rho,
        mean,
        stderr,
        n_traj,
        n_aborted,
        first_abort,
    })
}

#[derive(Debug, Clone)]
pub struct ObservableComparison {
    pub observable: Observable,
    pub z: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct ComparisonReport {
    pub times: Vec<f64>,
    pub per_observable: Vec<ObservableComparison>,
    pub max_z: f64,
    /// Fraction of (time, observable) points with z > 3.
    pub fraction_above_3: f64,
    pub n_points: usize,
}

impl ComparisonReport {
    pub fn fraction_within(&self, z: f64) -> f64 {
        let within = self
            .per_observable
            .iter()
            .flat_map(|o| &o.z)
            .filter(|&&v| v <= z)
            .count();
        within as f64 / self.n_points.max(1) as f64
    }

    /// ≥ 99% of points with z ≤ 3.
    pub fn passes(&self) -> bool {
        self.fraction_within(3.0) >= 0.99
    }

    pub fn write_csv<W: Write>(&self, out: W, time_scale: f64) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["t".to_string()];
        header.extend(self.per_observable.iter().map(|o| format!("{}_z", o.observable)));
        w.write_record(&header)?;
        for (k, t) in self.times.iter().enumerate() {
            let mut row = vec![format!("{}", t * time_scale)];
            row.extend(self.per_observable.iter().map(|o| format!("{}", o.z[k])));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

impl fmt::Display for ComparisonReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "max z = {:.3}; {:.2}% of {} points within z <= 3; {}",
            self.max_z,
            100.0 * self.fraction_within(3.0),
            self.n_points,
            if self.passes() { "pass" } else { "fail" }
        )
    }
}

/// z = |mean - oracle| / stderr per observable and time. A zero standard
/// error gives z = 0 when the difference is negligible and +∞ otherwise.
pub fn compare_to_oracle(
    stats: &EnsembleStats,
    oracle: &MeSolution,
    observables: &[Observable],
) -> Result<ComparisonReport> {
    if stats.times.len() != oracle.times.len()
        || stats
            .times
            .iter()
            .zip(&oracle.times)
            .any(|(a, b)| (a - b).abs() > 1e-9 * a.abs().max(1.0))
    {
        return Err(Error::GridMismatch(format!(
            "ensemble has {} samples, oracle has {}",
            stats.times.len(),
            oracle.times.len()
        )));
    }
    let n = stats.dim();
    let mut per_observable = Vec::with_capacity(observables.len());
    let mut max_z: f64 = 0.0;
    let mut above = 0;
    let mut n_points = 0;
    for &obs in observables {
        let k = obs.index(n);
        let z: Vec<f64> = (0..stats.times.len())
            .map(|t| {
                let diff = (stats.mean[t][k] - obs.evaluate(oracle.states[t].matrix())).abs();
                let se = stats.stderr[t][k];
                if se > 0.0 {
                    diff / se
                } else if diff <= 1e-12 {
                    0.0
                } else {
                    f64::INFINITY
                }
            })
            .collect();
        for &v in &z {
            max_z = max_z.max(v);
            above += (v > 3.0) as usize;
            n_points += 1;
        }
        per_observable.push(ObservableComparison { observable: obs, z });
    }
    Ok(ComparisonReport {
        times: stats.times.clone(),
        per_observable,
        max_z,
        fraction_above_3: above as f64 / n_points.max(1) as f64,
        n_points,
    })
}
