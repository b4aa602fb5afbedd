use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use glvx_cli::config::{parse_config, ExperimentConfig, Model};
use glvx_cli::experiment::{
    exit_code, exit_code_for, glue, run_comparison, run_effective, run_lattice, solve_profiles, verify_asymptotics,
    with_model, with_threads,
};
use glvx_core::{Error, Result};

/// Ginzburg-Landau vortex experiments.
#[derive(Debug, Parser)]
#[command(name = "glvx", version)]
struct Cli {
    /// Experiment configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides `output_dir` from the configuration.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for the lattice kernels.
    #[arg(long, global = true, env = "GLVX_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve the radial profiles for the configured degrees.
    Profile,
    /// Build the glued initial field and write it as a GLVX snapshot.
    Glue,
    /// Run the lattice gradient flow.
    EvolveGf,
    /// Run the lattice Maxwell-Higgs dynamics.
    EvolveMh,
    /// Integrate the effective vortex-centre law.
    Effective,
    /// Run the lattice model and its effective law and compare the tracks.
    Compare,
    /// Check the two-centre integral estimates.
    VerifyAsymptotics,
}

fn load(cli: &Cli) -> Result<(ExperimentConfig, PathBuf)> {
    let path = cli
        .config
        .as_deref()
        .ok_or_else(|| Error::Configuration("this subcommand needs --config <path>".into()))?;
    let config = parse_config(path)?;
    let out = cli.out.clone().unwrap_or_else(|| config.output_dir.clone());
    Ok((config, out))
}

fn report(out: &Path, what: &str) {
    eprintln!("{what} written to {}", out.display());
}

fn run(cli: &Cli) -> Result<i32> {
    match cli.command {
        Command::VerifyAsymptotics => {
            let out = cli.out.clone().unwrap_or_else(|| PathBuf::from("glvx-out"));
            let records = verify_asymptotics(Some(&out))?;
            for r in &records {
                println!(
                    "{:<32} {:<36} measured {:>14.6e} expected {:>12.6e} {}",
                    r.check,
                    r.parameters,
                    r.measured,
                    r.expected,
                    if r.pass { "PASS" } else { "FAIL" }
                );
            }
            report(&out, "asymptotics.csv");
            Ok(if records.iter().all(|r| r.pass) {
                exit_code::OK
            } else {
                exit_code::COMPARISON
            })
        }
        Command::Profile => {
            let (config, out) = load(cli)?;
            for (n, p) in solve_profiles(&config, Some(&out))? {
                let s = &p.scalars;
                println!(
                    "n={n} lambda={} energy={:.8} gamma={:.8} beta={:.8} rate_f={:.5} rate_B={:.5}",
                    config.lambda, s.energy, s.gamma_n, s.beta_n, s.fitted_rate_f, s.fitted_rate_b
                );
            }
            report(&out, "profiles");
            Ok(exit_code::OK)
        }
        Command::Glue => {
            let (config, out) = load(cli)?;
            let summary = glue(&config, &out)?;
            println!(
                "energy={:.8} degree={} flux={:.8} vortices={}",
                summary.energy,
                summary.degree,
                summary.flux,
                summary.located.len()
            );
            report(&out, "initial.glvx and glue.json");
            Ok(exit_code::OK)
        }
        Command::EvolveGf | Command::EvolveMh => {
            let (config, out) = load(cli)?;
            let model = if matches!(cli.command, Command::EvolveGf) {
                Model::GradientFlow
            } else {
                Model::MaxwellHiggs
            };
            let config = if config.model == model { config } else { with_model(&config, model)? };
            let run = run_lattice(&config, Some(&out))?;
            let s = &run.summary;
            println!(
                "t_end={} energy {:.10} -> {:.10} (max relative change {:.3e}), vortices {}",
                s.t_end, s.initial_energy, s.final_energy, s.max_relative_energy_change, s.vortex_count
            );
            report(&out, "diagnostics.csv, tracks.csv and snapshots");
            Ok(exit_code::OK)
        }
        Command::Effective => {
            let (config, out) = load(cli)?;
            let model = match config.model {
                Model::GradientFlow | Model::EffectiveGf => Model::EffectiveGf,
                Model::MaxwellHiggs | Model::EffectiveMh => Model::EffectiveMh,
            };
            let config = if config.model == model { config } else { with_model(&config, model)? };
            let (_, trajectory) = run_effective(&config, Some(&out))?;
            println!(
                "recorded {} states, W {:.6e} -> {:.6e}",
                trajectory.times.len(),
                trajectory.interaction[0],
                trajectory.interaction.last().unwrap()
            );
            report(&out, "effective.csv");
            Ok(exit_code::OK)
        }
        Command::Compare => {
            let (config, out) = load(cli)?;
            if !config.model.is_lattice() {
                return Err(Error::Configuration("compare needs model gradient_flow or maxwell_higgs".into()));
            }
            let (_, comparison) = run_comparison(&config, Some(&out))?;
            println!("epsilon = {:.4e}", comparison.epsilon);
            for v in &comparison.verdicts {
                println!(
                    "{:<24} {:>12.5e} (threshold {:.5e}) {}",
                    v.name,
                    v.value,
                    v.threshold,
                    if v.pass { "PASS" } else { "FAIL" }
                );
            }
            report(&out, "comparison.json");
            Ok(if comparison.pass {
                exit_code::OK
            } else {
                exit_code::COMPARISON
            })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.threads {
        Some(0) => Err(Error::Configuration("--threads must be at least 1".into())),
        Some(n) => with_threads(n, || run(&cli)).and_then(|r| r),
        None => run(&cli),
    };
    let code = match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    };
    ExitCode::from(code as u8)
}
