use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use catsbm::harness::{self, ExperimentConfig};

#[derive(Parser)]
#[command(name = "catsbm", about = "Catalytic branching simulation toolkit", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// experiment configuration (TOML)
    #[arg(long)]
    config: Option<PathBuf>,
    /// RNG base seed (overrides the config)
    #[arg(long)]
    seed: Option<u64>,
    /// output directory for manifest.json and CSV artifacts
    #[arg(long)]
    out: Option<PathBuf>,
    /// replicate count (overrides the config)
    #[arg(long)]
    replicates: Option<u64>,
    /// worker thread count (default: all cores)
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Fit the motion constants (a, c0, c1, alpha_hat) and write a
    /// calibration manifest
    Calibrate(CommonArgs),
    /// Run the experiment described by --config
    Run(CommonArgs),
    /// Run the standing cross-module validation battery
    Validate(CommonArgs),
    /// Build stage schedules from --config and check the hypotheses
    Schedule(CommonArgs),
    /// Solve the log-Laplace PDE for the configured density model
    Pde(CommonArgs),
}

fn load_config(args: &CommonArgs, default_kind: &str) -> catsbm::Result<ExperimentConfig> {
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::from_path(path)?,
        None => ExperimentConfig::minimal(default_kind),
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(reps) = args.replicates {
        cfg.replicates = reps;
    }
    if let Some(threads) = args.threads {
        cfg.threads = Some(threads);
    }
    Ok(cfg)
}

fn execute(cli: Cli) -> catsbm::Result<harness::RunManifest> {
    let (args, runner): (&CommonArgs, Box<dyn FnOnce(ExperimentConfig) -> catsbm::Result<harness::RunManifest> + Send>) =
        match &cli.command {
            Command::Calibrate(a) => {
                let out = a.out.clone();
                (a, Box::new(move |cfg| harness::calibrate(cfg.seed, cfg.replicates, out.as_deref())))
            }
            Command::Run(a) => {
                let out = a.out.clone();
                (a, Box::new(move |cfg| harness::run_experiment(&cfg, out.as_deref())))
            }
            Command::Validate(a) => {
                let out = a.out.clone();
                (a, Box::new(move |cfg| harness::validate_battery(cfg.seed, out.as_deref())))
            }
            Command::Schedule(a) => {
                let out = a.out.clone();
                (a, Box::new(move |cfg| harness::schedule_report(&cfg, out.as_deref())))
            }
            Command::Pde(a) => {
                let out = a.out.clone();
                (a, Box::new(move |cfg| harness::pde_report(&cfg, out.as_deref())))
            }
        };
    let default_kind = match &cli.command {
        Command::Run(_) => "extinction_curve",
        Command::Schedule(_) => "schedule",
        Command::Pde(_) => "pde",
        Command::Calibrate(_) => "calibrate",
        Command::Validate(_) => "validate",
    };
    let cfg = load_config(args, default_kind)?;
    match cfg.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| catsbm::Error::Config(e.to_string()))?
            .install(|| runner(cfg.clone())),
        None => runner(cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(manifest) => {
            for c in &manifest.checks {
                let verdict = if c.pass { "pass" } else { "FAIL" };
                match (c.se, c.z) {
                    (Some(se), Some(z)) => println!(
                        "[{verdict}] {}: estimate {:.6} (se {:.2e}), target {:.6}, z = {:.2}",
                        c.name, c.estimate, se, c.target, z
                    ),
                    _ => println!(
                        "[{verdict}] {}: value {:.6}, target {:.6}",
                        c.name, c.estimate, c.target
                    ),
                }
            }
            println!(
                "{}: {} in {:.1}s",
                manifest.experiment,
                if manifest.pass { "all checks passed" } else { "CHECKS FAILED" },
                manifest.wall_secs
            );
            if manifest.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
