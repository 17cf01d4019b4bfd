// Copyright 2026 The posqsd Authors
// SPDX-License-Identifier: Apache-2.0

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use posqsd::ensemble::{compare_to_oracle, run_ensemble, AbortPolicy, Observable};
use posqsd::generator::redfield_to_nondiagonal;
use posqsd::models::PresetGenerator;
use posqsd::oracle::{solve_me_strided, DensityMatrix};
use posqsd::positivity::{check_cp_via_ancilla, check_kossakowski, ANCILLA_DIM_CAP};
use posqsd::rng::mix_seed;
use posqsd::unraveling::run_trajectory;
use posqsd::{GeneratorFile, RedfieldTensor, SdeConfig, StateVector, UnravelingMode, VerdictKind};

use crate::args::{ExportFormat, Resolved, RunArgs, Source};

pub const EXIT_OK: u8 = 0;
pub const EXIT_VIOLATION: u8 = 2;

fn open_out(path: &Option<PathBuf>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

pub fn format_state(psi: &StateVector) -> String {
    let amps: Vec<[f64; 2]> = psi.iter().map(|z| [z.re, z.im]).collect();
    serde_json::to_string(&amps).expect("finite amplitudes")
}

fn sde_config(r: &Resolved, mode: UnravelingMode) -> anyhow::Result<SdeConfig> {
    let cfg = SdeConfig::new(r.dt, r.t_final, mode, r.seed).with_stride(r.sample_stride);
    cfg.validate()?;
    Ok(cfg)
}

pub fn trajectories(args: &RunArgs) -> anyhow::Result<u8> {
    let r = args.resolve()?;
    let setup = r.setup()?;
    let psi0 = r.initial_state(&setup)?;
    let cfg = sde_config(&r, r.unraveling_mode(&setup.generator))?;
    let mut out = open_out(&r.out)?;
    let mut first_abort = None;
    for i in 0..r.n_traj {
        let traj_cfg = SdeConfig {
            seed: mix_seed(r.seed, i as u64),
            ..cfg
        };
        let traj = run_trajectory(&setup.generator, &psi0, &traj_cfg)?;
        traj.write_jsonl(i, &mut out, r.time_unit_scale)?;
        if let (None, Some(a)) = (&first_abort, traj.aborted_at) {
            first_abort = Some((i, a));
        }
    }
    out.flush()?;
    match first_abort {
        None => Ok(EXIT_OK),
        Some((i, a)) => {
            eprintln!(
                "positivity violation: trajectory {i} aborted at t = {:.6e} (rate-operator eigenvalue {:.6e})",
                a.time * r.time_unit_scale,
                a.min_eigenvalue
            );
            eprintln!("witness state = {}", format_state(&a.state));
            Ok(EXIT_VIOLATION)
        }
    }
}

pub fn ensemble(args: &RunArgs) -> anyhow::Result<u8> {
    let r = args.resolve()?;
    let setup = r.setup()?;
    let gen = &setup.generator;
    let psi0 = r.initial_state(&setup)?;
    let mode = r.unraveling_mode(gen);
    let cfg = sde_config(&r, mode)?;

    // An abort after a passed positivity check is a hard failure.
    let policy = if gen.has_nonnegative_rates() {
        AbortPolicy::Fail
    } else {
        let verdict = check_kossakowski(gen, r.samples, r.seed);
        if verdict.kind == VerdictKind::ViolationFound {
            eprintln!(
                "warning: generator failed the positivity check (min value {:.6e}); aborted trajectories are excluded",
                verdict.min_value
            );
            AbortPolicy::Exclude
        } else {
            AbortPolicy::Fail
        }
    };

    let stats = run_ensemble(gen, &psi0, &cfg, r.n_traj, r.workers, policy)?;
    let mut out = open_out(&r.out)?;
    stats.write_csv(&mut out, r.time_unit_scale)?;
    out.flush()?;
    eprintln!(
        "{}: {} trajectories, {} aborted, mode {mode}",
        setup.label, stats.n_traj, stats.n_aborted
    );

    if r.oracle {
        let rho0 = DensityMatrix::pure(&psi0)?;
        let oracle = solve_me_strided(gen, &rho0, r.dt, r.t_final, r.sample_stride)?;
        let report = compare_to_oracle(&stats, &oracle, &Observable::populations(gen.dim()))?;
        eprintln!("oracle comparison (populations): {report}");
        if let Some(path) = &r.out {
            let z_path = z_scores_path(path);
            report.write_csv(BufWriter::new(File::create(&z_path)?), r.time_unit_scale)?;
            eprintln!("z-scores written to {}", z_path.display());
        }
    }
    Ok(if stats.n_aborted > 0 { EXIT_VIOLATION } else { EXIT_OK })
}

fn z_scores_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("ensemble");
    out.with_file_name(format!("{stem}.z.csv"))
}

pub fn check(args: &RunArgs) -> anyhow::Result<u8> {
    let r = args.resolve()?;
    let setup = r.setup()?;
    let gen = &setup.generator;
    let v = check_kossakowski(gen, r.samples, r.seed);
    let mut out = open_out(&r.out)?;
    if v.kind == VerdictKind::Cp {
        writeln!(out, "{}; min rate = {:.6}", v.kind, v.min_rate)?;
    } else {
        writeln!(
            out,
            "{}; min rate = {:.6}; min Kossakowski value = {:.6e}",
            v.kind, v.min_rate, v.min_value
        )?;
    }
    if v.kind == VerdictKind::ViolationFound {
        if let (Some(s), Some(p)) = (&v.witness_state, &v.witness_partner) {
            writeln!(out, "witness state = {}", format_state(s))?;
            writeln!(out, "witness partner = {}", format_state(p))?;
        }
    }
    if gen.dim() <= ANCILLA_DIM_CAP {
        let a = check_cp_via_ancilla(gen, r.samples.min(10_000).max(1), r.seed)?;
        let cp = match a.kind {
            VerdictKind::ViolationFound => "not CP",
            VerdictKind::Cp => "CP",
            VerdictKind::PNotCp => "no CP violation found",
        };
        writeln!(
            out,
            "ancilla: {cp}; min extended rate-operator eigenvalue = {:.6e}; samples = {}",
            a.min_value, a.samples_used
        )?;
    }
    writeln!(out, "samples = {}", v.samples_used)?;
    out.flush()?;
    Ok(if v.kind == VerdictKind::ViolationFound {
        EXIT_VIOLATION
    } else {
        EXIT_OK
    })
}

pub fn solve_me(args: &RunArgs) -> anyhow::Result<u8> {
    let r = args.resolve()?;
    let setup = r.setup()?;
    let rho0 = DensityMatrix::pure(&r.initial_state(&setup)?)?;
    let sol = solve_me_strided(&setup.generator, &rho0, r.dt, r.t_final, r.sample_stride)?;
    let mut out = open_out(&r.out)?;
    sol.write_csv(&mut out, r.time_unit_scale)?;
    out.flush()?;
    Ok(EXIT_OK)
}

pub fn export(args: &RunArgs) -> anyhow::Result<u8> {
    let r = args.resolve()?;
    let setup = r.setup()?;
    // Keep the published coefficients verbatim when the preset has them and
    // no rate override was applied.
    let tensor = || -> RedfieldTensor {
        match (&r.source, &r.rates) {
            (Source::Model(m), None) => match posqsd::preset(*m).generator {
                PresetGenerator::Redfield(t) => t,
                PresetGenerator::Diagonal(g) => g.to_redfield(),
            },
            _ => setup.generator.to_redfield(),
        }
    };
    let file = match r.format {
        ExportFormat::Diagonal => GeneratorFile::from_diagonal(&setup.generator),
        ExportFormat::Redfield => GeneratorFile::from_redfield(&tensor()),
        ExportFormat::Nondiagonal => GeneratorFile::from_nondiagonal(&redfield_to_nondiagonal(&tensor())?),
    };
    let mut out = open_out(&r.out)?;
    writeln!(out, "{}", file.to_json_string()?)?;
    out.flush()?;
    Ok(EXIT_OK)
}
