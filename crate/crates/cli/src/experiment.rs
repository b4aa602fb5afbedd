//! Experiment orchestration: profiles, initial data, evolution, effective
//! runs, comparisons, and the files they leave behind.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use glvx_core::asymptotics::{verification_report, write_report_csv, CheckRecord, QuadratureSpec};
use glvx_core::effective::{
    integrate_effective, EffectiveLaw, EffectiveParams, EffectiveState, EffectiveTrajectory,
};
use glvx_core::evolve::{evolve, DiagnosticsCsv, SnapshotDir, Trajectory, TrajectorySink};
use glvx_core::lattice::{
    build_multivortex, degree, energy, flux, momentum_for, profile_set, write_snapshot, FieldState, FieldVector,
    MomentumState, ProfileSet,
};
use glvx_core::tracking::locate_vortices;
use glvx_core::{Error, Result};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::compare::{compare_trajectories, ComparisonReport, Thresholds, TrackSeries};
use crate::config::{ExperimentConfig, Model};

/// Process exit codes.
pub mod exit_code {
    pub const OK: i32 = 0;
    pub const FAILURE: i32 = 1;
    pub const CONFIGURATION: i32 = 2;
    pub const BLOW_UP: i32 = 3;
    pub const TOPOLOGY: i32 = 4;
    pub const COMPARISON: i32 = 5;
}

pub fn exit_code_for(error: &Error) -> i32 {
    match error {
        Error::Configuration(_)
        | Error::Parameter(_)
        | Error::Placement { .. }
        | Error::Shape(_)
        | Error::SeparationViolation { .. }
        | Error::TypeIUnsupported { .. } => exit_code::CONFIGURATION,
        Error::BlowUp { .. } => exit_code::BLOW_UP,
        Error::TopologyChange(_) => exit_code::TOPOLOGY,
        Error::Comparison(_) => exit_code::COMPARISON,
        _ => exit_code::FAILURE,
    }
}

/// Runs `work` on a dedicated pool of `threads` workers.
pub fn with_threads<T: Send>(threads: usize, work: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Configuration(format!("thread pool: {e}")))?;
    Ok(pool.install(work))
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    std::fs::create_dir_all(dir)?;
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(create(dir, name)?, value)?;
    Ok(())
}

/// Solves one profile per distinct degree and stores them under `out/profiles`.
pub fn solve_profiles(config: &ExperimentConfig, out: Option<&Path>) -> Result<ProfileSet> {
    let profiles = profile_set(config.lambda, &config.degrees())?;
    if let Some(dir) = out {
        for (n, profile) in &profiles {
            profile.save(&dir.join("profiles"), &format!("profile_n{n}_lambda{}", config.lambda))?;
        }
    }
    Ok(profiles)
}

/// Adds seeded uniform noise of the given amplitude to every free component.
pub fn perturb(field: &mut FieldState, amplitude: f64, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut noise = FieldVector::zeros(field.lattice.num_sites());
    for z in noise.psi.iter_mut() {
        *z = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    }
    for v in noise.ax.iter_mut().chain(noise.ay.iter_mut()) {
        *v = rng.gen_range(-1.0..1.0);
    }
    noise.zero_frozen(&field.lattice);
    field.fields.axpy(amplitude, &noise);
}

/// Initial lattice data for `config`.
pub fn initial_data(config: &ExperimentConfig, profiles: &ProfileSet) -> Result<(FieldState, Option<MomentumState>)> {
    let lattice = config.lattice_spec()?;
    let ansatz = config.ansatz();
    let mut field = build_multivortex(profiles, &ansatz, &lattice)?;
    let momentum = if config.model.has_momentum() {
        Some(momentum_for(&field, profiles, &ansatz)?)
    } else {
        None
    };
    if let Some(p) = &config.perturbation {
        perturb(&mut field, p.amplitude, p.seed);
    }
    Ok((field, momentum))
}

#[derive(Debug, Clone, Serialize)]
pub struct GlueSummary {
    pub energy: f64,
    pub degree: i32,
    pub flux: f64,
    pub located: Vec<[f64; 2]>,
    pub lattice_extent: f64,
    pub points_per_side: usize,
    pub spacing: f64,
}

/// Builds the initial field and writes `initial.glvx` and `glue.json`.
pub fn glue(config: &ExperimentConfig, out: &Path) -> Result<GlueSummary> {
    let profiles = solve_profiles(config, Some(out))?;
    let (field, momentum) = initial_data(config, &profiles)?;
    write_snapshot(create(out, "initial.glvx")?, &field, momentum.as_ref())?;
    let lattice = field.lattice;
    let summary = GlueSummary {
        energy: energy(&field),
        degree: degree(&field)?,
        flux: flux(&field),
        located: locate_vortices(&field)?.iter().map(|o| o.position).collect(),
        lattice_extent: lattice.extent(),
        points_per_side: lattice.points_per_side(),
        spacing: lattice.spacing(),
    };
    write_json(out, "glue.json", &summary)?;
    Ok(summary)
}

#[derive(Debug, Clone, Serialize)]
pub struct LatticeRunSummary {
    pub model: Model,
    pub steps_recorded: usize,
    pub t_end: f64,
    pub initial_energy: f64,
    pub final_energy: f64,
    pub max_relative_energy_change: f64,
    pub initial_gauss_residual: Option<f64>,
    pub max_gauss_residual: Option<f64>,
    pub vortex_count: usize,
}

/// Result of a lattice evolution.
#[derive(Debug, Clone)]
pub struct LatticeRun {
    pub trajectory: Trajectory,
    pub summary: LatticeRunSummary,
    /// Bytes of `diagnostics.csv`.
    pub diagnostics: Vec<u8>,
}

/// Evolves the lattice model of `config`. With `out`, writes
/// `diagnostics.csv`, `tracks.csv`, `initial.glvx`, `final.glvx`,
/// `run.json` and optionally every snapshot under `snapshots/`.
pub fn run_lattice(config: &ExperimentConfig, out: Option<&Path>) -> Result<LatticeRun> {
    if !config.model.is_lattice() {
        return Err(Error::Configuration(format!("model {:?} is not a lattice model", config.model)));
    }
    let profiles = solve_profiles(config, out)?;
    let (field, momentum) = initial_data(config, &profiles)?;
    let run = config.run_config()?;
    let mut diagnostics = DiagnosticsCsv::new(Vec::new());
    let mut snapshots = out.filter(|_| config.run.all_snapshots).map(|dir| SnapshotDir {
        dir: dir.join("snapshots"),
    });
    let outcome = {
        let mut sinks: Vec<&mut dyn TrajectorySink> = vec![&mut diagnostics];
        if let Some(s) = snapshots.as_mut() {
            sinks.push(s);
        }
        evolve(&field, momentum.as_ref(), run, &mut sinks)?
    };
    let diagnostics = diagnostics.into_inner();
    let trajectory = outcome.trajectory;
    let energies = &trajectory.energy_series;
    let e0 = energies[0];
    let summary = LatticeRunSummary {
        model: config.model,
        steps_recorded: trajectory.times.len(),
        t_end: *trajectory.times.last().unwrap_or(&0.0),
        initial_energy: e0,
        final_energy: *energies.last().unwrap_or(&e0),
        max_relative_energy_change: energies.iter().map(|e| ((e - e0) / e0).abs()).fold(0.0, f64::max),
        initial_gauss_residual: trajectory.gauss_series.as_ref().map(|g| g[0]),
        max_gauss_residual: trajectory.gauss_series.as_ref().map(|g| g.iter().copied().fold(0.0, f64::max)),
        vortex_count: trajectory.tracks.tracks.len(),
    };
    if let Some(dir) = out {
        std::io::Write::write_all(&mut create(dir, "diagnostics.csv")?, &diagnostics)?;
        trajectory.tracks.write_csv(create(dir, "tracks.csv")?)?;
        write_snapshot(create(dir, "initial.glvx")?, &field, momentum.as_ref())?;
        write_snapshot(create(dir, "final.glvx")?, &outcome.field, outcome.momentum.as_ref())?;
        write_json(dir, "run.json", &summary)?;
    }
    Ok(LatticeRun {
        trajectory,
        summary,
        diagnostics,
    })
}

fn effective_law(model: Model) -> EffectiveLaw {
    if model.has_momentum() {
        EffectiveLaw::MaxwellHiggs
    } else {
        EffectiveLaw::GradientFlow
    }
}

/// Integrates the effective law matching `config.model`; writes `effective.csv`.
pub fn run_effective(config: &ExperimentConfig, out: Option<&Path>) -> Result<(EffectiveParams, EffectiveTrajectory)> {
    let profiles = solve_profiles(config, out)?;
    let params = EffectiveParams::from_profiles(&profiles, &config.degrees())?;
    let ansatz = config.ansatz();
    let mut state = EffectiveState::at_rest(ansatz.positions.clone());
    if config.model.has_momentum() {
        state.momenta = ansatz.momenta_p.clone();
    }
    let trajectory = integrate_effective(
        &state,
        &params,
        effective_law(config.model),
        config.run.effective_dt,
        config.run.t_end,
        1,
    )?;
    if let Some(dir) = out {
        trajectory.write_csv(create(dir, "effective.csv")?)?;
    }
    Ok((params, trajectory))
}

/// Lattice run, matching effective run, and their comparison (`comparison.json`).
pub fn run_comparison(config: &ExperimentConfig, out: Option<&Path>) -> Result<(LatticeRun, ComparisonReport)> {
    let lattice_run = run_lattice(config, out)?;
    let (params, effective) = run_effective(config, out)?;
    let ansatz = config.ansatz();
    let pde = TrackSeries::from_trajectory(&lattice_run.trajectory, &ansatz.positions)?;
    let h = config.lattice_spec()?.spacing();
    let initial_speed = ansatz.momenta_p.iter().map(|p| p[0].hypot(p[1])).fold(0.0, f64::max);
    let c = &config.compare;
    let thresholds = Thresholds {
        max_relative_law_residual: c.max_relative_law_residual,
        max_velocity_mismatch: c.max_velocity_mismatch_fraction * initial_speed,
        max_deviation: c.max_deviation_spacings * h,
        min_separation: c.min_separation,
    };
    let report = compare_trajectories(&pde, &effective, &params, &thresholds)?;
    if let Some(dir) = out {
        write_json(dir, "comparison.json", &report)?;
    }
    Ok((lattice_run, report))
}

/// What [`run_experiment`] produced.
#[derive(Debug, Clone)]
pub enum ExperimentOutcome {
    Lattice(LatticeRun),
    Effective(EffectiveParams, EffectiveTrajectory),
}

/// Runs the model selected by `config.model`.
pub fn run_experiment(config: &ExperimentConfig, out: Option<&Path>) -> Result<ExperimentOutcome> {
    match config.model {
        Model::GradientFlow | Model::MaxwellHiggs => run_lattice(config, out).map(ExperimentOutcome::Lattice),
        Model::EffectiveGf | Model::EffectiveMh => {
            run_effective(config, out).map(|(p, t)| ExperimentOutcome::Effective(p, t))
        }
    }
}

/// Runs the two-centre integral checks and writes `asymptotics.csv`.
pub fn verify_asymptotics(out: Option<&Path>) -> Result<Vec<CheckRecord>> {
    let records = verification_report(&QuadratureSpec::default())?;
    if let Some(dir) = out {
        write_report_csv(&records, create(dir, "asymptotics.csv")?)?;
    }
    Ok(records)
}

/// Forces `model` onto a copy of `config` for subcommands that fix the model.
pub fn with_model(config: &ExperimentConfig, model: Model) -> Result<ExperimentConfig> {
    let mut c = config.clone();
    c.model = model;
    c.validate()?;
    Ok(c)
}
