use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::error;
use paraqsim::experiments::{
    load_config, run_dimension_scaling, run_epsilon_convergence, run_fidelity_scan,
    run_hamiltonian_report, run_initial_layer, run_recovery, DimScalingConfig,
    EpsConvergenceConfig, ExperimentConfig, FidelityScanConfig, HamReportConfig,
    InitialLayerConfig, RecoveryConfig,
};
use paraqsim::Error;

#[derive(Parser)]
#[command(
    name = "paraqsim",
    version,
    about = "Relaxation / Schrodingerisation experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON configuration; defaults are used when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output_dir` in the config).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Gaussian ancilla fidelity against the squeezing parameter.
    FidelityScan(Common),
    /// Relaxation error against epsilon for a 1D flavor.
    EpsConvergence(Common),
    /// Relaxation error and register size against dimension.
    DimScaling(Common),
    /// Constraint residual inside the initial layer.
    InitialLayer(Common),
    /// End-to-end recovery of u from the unitary simulation.
    Recovery(Common),
    /// Hamiltonian term listing for one relaxation system.
    HamReport(Common),
}

const DEFAULT_OUT: &str = "results";

fn resolve<C: ExperimentConfig>(common: &Common) -> paraqsim::Result<(C, PathBuf)> {
    let cfg = match &common.config {
        Some(path) => load_config::<C>(path)?,
        None => {
            let cfg = C::default();
            cfg.validate()?;
            cfg
        }
    };
    let out = common
        .out
        .clone()
        .or_else(|| cfg.output_dir().map(Path::to_path_buf))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    Ok((cfg, out))
}

fn report(files: Vec<PathBuf>, summary: &impl serde::Serialize) -> paraqsim::Result<()> {
    println!("{}", serde_json::to_string_pretty(summary)?);
    for f in files {
        println!("wrote {}", f.display());
    }
    Ok(())
}

fn run(cli: Cli) -> paraqsim::Result<()> {
    match cli.command {
        Command::FidelityScan(c) => {
            let (cfg, out) = resolve::<FidelityScanConfig>(&c)?;
            let r = run_fidelity_scan(&cfg)?;
            report(r.write(&out)?, &r.summary)
        }
        Command::EpsConvergence(c) => {
            let (cfg, out) = resolve::<EpsConvergenceConfig>(&c)?;
            let r = run_epsilon_convergence(&cfg)?;
            report(r.write(&out)?, &r.summary)
        }
        Command::DimScaling(c) => {
            let (cfg, out) = resolve::<DimScalingConfig>(&c)?;
            let r = run_dimension_scaling(&cfg)?;
            report(r.write(&out)?, &r.summary)
        }
        Command::InitialLayer(c) => {
            let (cfg, out) = resolve::<InitialLayerConfig>(&c)?;
            let r = run_initial_layer(&cfg)?;
            report(r.write(&out)?, &r.summary)
        }
        Command::Recovery(c) => {
            let (cfg, out) = resolve::<RecoveryConfig>(&c)?;
            let r = run_recovery(&cfg)?;
            report(r.write(&out)?, &r.summary)
        }
        Command::HamReport(c) => {
            let (cfg, out) = resolve::<HamReportConfig>(&c)?;
            let r = run_hamiltonian_report(&cfg)?;
            println!("{}", r.report.system_size);
            let files = r.write(&out)?;
            for f in files {
                println!("wrote {}", f.display());
            }
            Ok(())
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::ResourceGuard { .. } => 3,
        Error::Io(_) | Error::Csv(_) => 1,
        _ => 2,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            error!("{e}");
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
