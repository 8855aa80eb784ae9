//! `phsctl` — batch experiment runner for the port-Hamiltonian in-domain
//! control toolkit: discretize a string plant, design the energy-shaping
//! controller, simulate the closed loop and export poles, trajectories
//! and a summary report as JSON/CSV.

mod config;
mod pipeline;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use pipeline::CliError;

#[derive(Parser)]
#[command(
    name = "phsctl",
    about = "Structure-preserving discretization and in-domain energy-shaping control experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a configuration file and report every violation.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Write the discretized plant matrices to plant.json.
    Discretize {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Design the controller and write controller.json.
    Design {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate and write trajectory.csv (plus optional state snapshots).
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Record every n-th step (overrides output.stride).
        #[arg(long)]
        stride: Option<usize>,
    },
    /// Eigenvalue map of the analyzed loop: poles.csv + poles_meta.json.
    Poles {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Full pipeline: discretize, design, simulate, analyze, report.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        stride: Option<usize>,
        /// Fan out over a parameter, e.g. --sweep alpha=1000,2000,4000.
        #[arg(long)]
        sweep: Option<String>,
    },
}

fn out_dir(flag: Option<PathBuf>, config: &config::ExperimentConfig) -> PathBuf {
    flag.unwrap_or_else(|| PathBuf::from(&config.output.directory))
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Validate { config } => {
            pipeline::load_config(&config)?;
            println!("ok");
            Ok(())
        }
        Command::Discretize { config, out } => {
            let cfg = pipeline::load_config(&config)?;
            let dir = out_dir(out, &cfg);
            std::fs::create_dir_all(&dir)?;
            let plant = pipeline::build_discrete(&cfg)?;
            pipeline::write_json(&dir.join("plant.json"), &plant)?;
            println!("wrote {}", dir.join("plant.json").display());
            Ok(())
        }
        Command::Design { config, out } => {
            let cfg = pipeline::load_config(&config)?;
            let dir = out_dir(out, &cfg);
            std::fs::create_dir_all(&dir)?;
            let plant = pipeline::build_discrete(&cfg)?;
            let ctrl = pipeline::build_controller(&cfg, &plant)?.ok_or_else(|| {
                CliError::Config(vec!["design requires a shaping section".into()])
            })?;
            pipeline::write_json(&dir.join("controller.json"), &ctrl)?;
            println!(
                "wrote {} (residual f = {:.6e})",
                dir.join("controller.json").display(),
                ctrl.residual
            );
            Ok(())
        }
        Command::Simulate {
            config,
            out,
            stride,
        } => {
            let cfg = pipeline::load_config(&config)?;
            let dir = out_dir(out, &cfg);
            std::fs::create_dir_all(&dir)?;
            let plant = pipeline::build_discrete(&cfg)?;
            let ctrl = pipeline::build_controller(&cfg, &plant)?;
            let sim_config = phs_control::SimConfig::new(
                cfg.discretization.dt,
                cfg.discretization.t_final,
                stride.unwrap_or(cfg.output.stride),
            )?;
            let (system, x0) = pipeline::build_simulation(&cfg, &plant, ctrl.as_ref())?;
            let trajectory = phs_control::simulate(&system, &x0, &sim_config)?;
            pipeline::write_trajectory_csv(&dir.join("trajectory.csv"), &trajectory)?;
            if cfg.output.snapshots {
                pipeline::write_state_snapshots(&dir, &trajectory, &plant)?;
            }
            println!(
                "wrote {} ({} records)",
                dir.join("trajectory.csv").display(),
                trajectory.len()
            );
            Ok(())
        }
        Command::Poles { config, out } => {
            let cfg = pipeline::load_config(&config)?;
            let dir = out_dir(out, &cfg);
            std::fs::create_dir_all(&dir)?;
            let plant = pipeline::build_discrete(&cfg)?;
            let ctrl = pipeline::build_controller(&cfg, &plant)?;
            let poleset = pipeline::analysis_poles(&cfg, &plant, ctrl.as_ref())?;
            pipeline::write_poles_csv(&dir.join("poles.csv"), &poleset)?;
            pipeline::write_json(&dir.join("poles_meta.json"), &poleset.meta)?;
            println!(
                "wrote {} ({} poles)",
                dir.join("poles.csv").display(),
                poleset.poles.len()
            );
            Ok(())
        }
        Command::Run {
            config,
            out,
            stride,
            sweep,
        } => {
            let cfg = pipeline::load_config(&config)?;
            let dir = out_dir(out, &cfg);
            match sweep {
                Some(spec) => {
                    let sweep = pipeline::parse_sweep(&spec)?;
                    let results = pipeline::run_sweep(&cfg, &dir, stride, &sweep)?;
                    for (label, report) in results {
                        println!(
                            "{label}: settle_time = {:.6e} s (settled: {}), margin = {:.6e}",
                            report.settle_time, report.settled, report.stability_margin
                        );
                    }
                }
                None => {
                    let report = pipeline::run_pipeline(&cfg, &dir, stride)?;
                    println!(
                        "settle_time = {:.6e} s (settled: {}), final H = {:.6e} J, margin = {:.6e}, residual = {:.6e}",
                        report.settle_time,
                        report.settled,
                        report.final_hamiltonian,
                        report.stability_margin,
                        report.residual
                    );
                }
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(error) => {
            eprintln!("error[{}]: {}", error.code(), error.message());
            ExitCode::from(error.exit_code() as u8)
        }
    }
}
