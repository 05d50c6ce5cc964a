//! `qptl` — experiment driver for the quasiperiodic transport laboratory.
//!
//! Usage: `qptl <subcommand> --config <path> [--out <dir>] [--workers N]`.
//! The subcommand must match the experiment kind declared in the config.
//! Exit codes: 0 success, 2 validation failure, 3 partial task failure.

use clap::{Args, Parser, Subcommand};
use qptl_core::harness::{output_dir, parse_config, run_experiment, HarnessError};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "qptl", version, about = "quasiperiodic transport laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment configuration (TOML)
    #[arg(long)]
    config: PathBuf,
    /// Output directory (defaults to the config's `output.dir`)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker count (default: QPTL_WORKERS or the available parallelism)
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Lyapunov-exponent sweep over an energy grid
    Lyapunov(RunArgs),
    /// Φ growth-criterion estimates over a T grid
    Phi(RunArgs),
    /// Growth-site certificates for random phases
    #[command(name = "growth-site")]
    GrowthSite(RunArgs),
    /// Level-set measures of the cocycle growth rate
    Vset(RunArgs),
    /// Wavepacket transport: moments, exponents, mass profiles
    Transport(RunArgs),
    /// Integrated density of states
    Ids(RunArgs),
    /// Truncated-norm spectral-mass check
    Kkl(RunArgs),
    /// Integrated reciprocal-growth decay check
    Dtcheck(RunArgs),
    /// Fejér approximation error sweep
    Fejer(RunArgs),
    /// Continued-fraction expansion and Diophantine report
    Cf(RunArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Lyapunov(_) => "lyapunov",
            Command::Phi(_) => "phi",
            Command::GrowthSite(_) => "growth-site",
            Command::Vset(_) => "vset",
            Command::Transport(_) => "transport",
            Command::Ids(_) => "ids",
            Command::Kkl(_) => "kkl",
            Command::Dtcheck(_) => "dtcheck",
            Command::Fejer(_) => "fejer",
            Command::Cf(_) => "cf",
        }
    }

    fn args(&self) -> &RunArgs {
        match self {
            Command::Lyapunov(a)
            | Command::Phi(a)
            | Command::GrowthSite(a)
            | Command::Vset(a)
            | Command::Transport(a)
            | Command::Ids(a)
            | Command::Kkl(a)
            | Command::Dtcheck(a)
            | Command::Fejer(a)
            | Command::Cf(a) => a,
        }
    }
}

fn resolve_workers(cli: Option<usize>, config: Option<usize>) -> usize {
    cli.or_else(|| std::env::var("QPTL_WORKERS").ok().and_then(|s| s.parse().ok()))
        .or(config)
        .unwrap_or_else(|| {
            std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
        })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let args = cli.command.args();

    let config = match parse_config(&args.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("qptl: {e}");
            return ExitCode::from(2);
        }
    };
    if config.experiment.name() != cli.command.name() {
        eprintln!(
            "qptl: subcommand `{}` does not match the config's experiment kind `{}`",
            cli.command.name(),
            config.experiment.name()
        );
        return ExitCode::from(2);
    }

    let workers = resolve_workers(args.workers, config.worker_count);
    let out = output_dir(&config, args.out.as_deref());
    eprintln!(
        "qptl: running {} ({} worker{}), config {}",
        config.experiment.name(),
        workers,
        if workers == 1 { "" } else { "s" },
        config.hash()
    );
    match run_experiment(&config, &out, workers) {
        Ok(manifest) => {
            let failed = manifest.failed_tasks();
            eprintln!(
                "qptl: {} finished — {} task(s), {} failed, outputs in {}",
                manifest.experiment,
                manifest.tasks.len(),
                failed,
                out.display()
            );
            for w in &manifest.warnings {
                eprintln!("qptl: warning: {w}");
            }
            if failed > 0 {
                ExitCode::from(3)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(HarnessError::Config(e)) => {
            eprintln!("qptl: {e}");
            ExitCode::from(2)
        }
        Err(HarnessError::BudgetExceeded { tasks, budget }) => {
            eprintln!("qptl: task grid of {tasks} points exceeds the budget {budget}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("qptl: {e}");
            ExitCode::from(2)
        }
    }
}
