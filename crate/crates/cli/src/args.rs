// Copyright 2026 The posqsd Authors
// SPDX-License-Identifier: Apache-2.0

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use posqsd::matrix::{self, StateVector};
use posqsd::{DiagonalGenerator, GeneratorFile, ModelName, UnravelingMode};
use serde::Deserialize;

#[derive(Debug, Parser)]
#[command(name = "posqsd", version, about = "Diffusive unravelings of positive master equations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write individual trajectories as JSON lines.
    Trajectories(RunArgs),
    /// Average many trajectories; optionally compare with the ME solution.
    Ensemble(RunArgs),
    /// Positivity diagnostics of the generator.
    Check(RunArgs),
    /// Integrate the master equation with RK4.
    SolveMe(RunArgs),
    /// Write the generator as a JSON generator file.
    Export(RunArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum ModeArg {
    Gtro,
    StandardQsd,
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExportFormat {
    Diagonal,
    Redfield,
    Nondiagonal,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// JSON run configuration; flags given on the command line win.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Built-in model.
    #[arg(long, value_parser = parse_model)]
    pub model: Option<ModelName>,
    /// JSON generator file (alternative to --model).
    #[arg(long)]
    pub generator_file: Option<PathBuf>,
    /// Initial state: 0-based basis index, `+` for the uniform
    /// superposition, or amplitudes as JSON `[[re, im], …]` (normalized).
    #[arg(long, allow_hyphen_values = true)]
    pub state: Option<String>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub t_final: Option<f64>,
    /// Number of trajectories.
    #[arg(long)]
    pub traj: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Worker threads for ensembles (0 = all cores).
    #[arg(long, env = "UNRAVEL_WORKERS")]
    pub workers: Option<usize>,
    /// Also solve the ME and report z-scores of the ensemble populations.
    #[arg(long)]
    pub oracle: bool,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Keep every k-th integration step.
    #[arg(long)]
    pub sample_stride: Option<usize>,
    /// Factor applied to the time column of every output.
    #[arg(long)]
    pub time_unit_scale: Option<f64>,
    /// Replace the rates of the diagonal form, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub rates: Option<Vec<f64>>,
    /// Random samples for the positivity checks.
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long, value_enum)]
    pub format: Option<ExportFormat>,
}

fn parse_model(s: &str) -> Result<ModelName, String> {
    s.parse().map_err(|e: posqsd::Error| e.to_string())
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum StateSpec {
    Index(usize),
    Amplitudes(Vec<[f64; 2]>),
    Label(String),
}

/// Run configuration file. Every field is optional.
#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: Option<String>,
    pub generator_file: Option<PathBuf>,
    pub initial_state: Option<StateSpec>,
    pub dt: Option<f64>,
    pub t_final: Option<f64>,
    pub n_traj: Option<usize>,
    pub seed: Option<u64>,
    pub mode: Option<ModeArg>,
    pub workers: Option<usize>,
    pub oracle: Option<bool>,
    pub out: Option<PathBuf>,
    pub sample_stride: Option<usize>,
    pub time_unit_scale: Option<f64>,
    pub rates: Option<Vec<f64>>,
    pub samples: Option<usize>,
    pub format: Option<ExportFormat>,
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("invalid config file {}", path.display()))
    }
}

pub enum Source {
    Model(ModelName),
    File(PathBuf),
}

/// Flags merged over the config file over defaults.
pub struct Resolved {
    pub source: Source,
    pub state: Option<StateSpec>,
    pub dt: f64,
    pub t_final: f64,
    pub n_traj: usize,
    pub seed: u64,
    pub mode: ModeArg,
    pub workers: usize,
    pub oracle: bool,
    pub out: Option<PathBuf>,
    pub sample_stride: usize,
    pub time_unit_scale: f64,
    pub rates: Option<Vec<f64>>,
    pub samples: usize,
    pub format: ExportFormat,
}

impl RunArgs {
    pub fn resolve(&self) -> anyhow::Result<Resolved> {
        let file = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        let model = match (&self.model, &file.model) {
            (Some(m), _) => Some(*m),
            (None, Some(s)) => Some(s.parse::<ModelName>()?),
            (None, None) => None,
        };
        let generator_file = self.generator_file.clone().or(file.generator_file);
        let source = match (model, generator_file) {
            (Some(m), None) => Source::Model(m),
            (None, Some(p)) => Source::File(p),
            (Some(_), Some(_)) if self.model.is_some() && self.generator_file.is_some() => {
                bail!("give either --model or --generator-file, not both")
            }
            // A flag on one side overrides the config file's other choice.
            (Some(m), Some(p)) => {
                if self.generator_file.is_some() {
                    Source::File(p)
                } else {
                    Source::Model(m)
                }
            }
            (None, None) => bail!("no generator: pass --model or --generator-file"),
        };
        let state = match &self.state {
            Some(s) => Some(parse_state_flag(s)?),
            None => file.initial_state,
        };
        Ok(Resolved {
            source,
            state,
            dt: self.dt.or(file.dt).unwrap_or(1e-3),
            t_final: self.t_final.or(file.t_final).unwrap_or(1.0),
            n_traj: self.traj.or(file.n_traj).unwrap_or(100),
            seed: self.seed.or(file.seed).unwrap_or(0),
            mode: self.mode.or(file.mode).unwrap_or(ModeArg::Auto),
            workers: self.workers.or(file.workers).unwrap_or(0),
            oracle: self.oracle || file.oracle.unwrap_or(false),
            out: self.out.clone().or(file.out),
            sample_stride: self.sample_stride.or(file.sample_stride).unwrap_or(10),
            time_unit_scale: self.time_unit_scale.or(file.time_unit_scale).unwrap_or(1.0),
            rates: self.rates.clone().or(file.rates),
            samples: self.samples.or(file.samples).unwrap_or(10_000),
            format: self.format.or(file.format).unwrap_or(ExportFormat::Diagonal),
        })
    }
}

fn parse_state_flag(s: &str) -> anyhow::Result<StateSpec> {
    let s = s.trim();
    if s.starts_with('[') {
        let amps: Vec<[f64; 2]> = serde_json::from_str(s).context("invalid amplitude list")?;
        return Ok(StateSpec::Amplitudes(amps));
    }
    if let Ok(k) = s.parse::<usize>() {
        return Ok(StateSpec::Index(k));
    }
    Ok(StateSpec::Label(s.to_string()))
}

impl StateSpec {
    pub fn build(&self, n: usize) -> anyhow::Result<StateVector> {
        match self {
            StateSpec::Index(k) => {
                if *k >= n {
                    bail!("basis index {k} out of range for dimension {n}");
                }
                Ok(matrix::basis_state(n, *k))
            }
            StateSpec::Amplitudes(a) => {
                if a.len() != n {
                    bail!("{} amplitudes given for dimension {n}", a.len());
                }
                let v = StateVector::from_iterator(n, a.iter().map(|z| matrix::c64(z[0], z[1])));
                matrix::normalize(&v).map_err(|e| anyhow!("initial state: {e}"))
            }
            StateSpec::Label(l) if l == "+" => {
                Ok(StateVector::from_element(n, matrix::real(1.0)).unscale((n as f64).sqrt()))
            }
            StateSpec::Label(l) => bail!("unknown state `{l}`"),
        }
    }
}

pub struct Setup {
    pub generator: DiagonalGenerator,
    pub label: String,
    pub default_state: Option<StateVector>,
}

impl Resolved {
    pub fn setup(&self) -> anyhow::Result<Setup> {
        let (mut generator, label, default_state) = match &self.source {
            Source::Model(m) => {
                let p = posqsd::preset(*m);
                (p.diagonal()?, m.to_string(), Some(p.default_initial_state))
            }
            Source::File(path) => {
                let file = GeneratorFile::load(path)
                    .with_context(|| format!("cannot load generator file {}", path.display()))?;
                (file.to_generator()?, path.display().to_string(), None)
            }
        };
        if let Some(rates) = &self.rates {
            if rates.len() != generator.n_channels() {
                bail!(
                    "--rates has {} values but the generator has {} channels",
                    rates.len(),
                    generator.n_channels()
                );
            }
            generator = generator.with_rates(rates.clone())?;
        }
        Ok(Setup {
            generator,
            label,
            default_state,
        })
    }

    pub fn initial_state(&self, setup: &Setup) -> anyhow::Result<StateVector> {
        let n = setup.generator.dim();
        match (&self.state, &setup.default_state) {
            (Some(s), _) => s.build(n),
            (None, Some(d)) => Ok(d.clone()),
            (None, None) => Ok(matrix::basis_state(n, 0)),
        }
    }

    pub fn unraveling_mode(&self, gen: &DiagonalGenerator) -> UnravelingMode {
        match self.mode {
            ModeArg::Gtro => UnravelingMode::Gtro,
            ModeArg::StandardQsd => UnravelingMode::StandardQsd,
            ModeArg::Auto if gen.has_nonnegative_rates() => UnravelingMode::StandardQsd,
            ModeArg::Auto => UnravelingMode::Gtro,
        }
    }
}
