use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pestctl::config::{load_config, ConfigBuilder};
use pestctl::scenarios::{self, Outcome, RunError};

#[derive(Parser)]
#[command(name = "pestctl", version, about = "Simulate, analyse and control the crop-pest-awareness model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Config file with `key = value` lines.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, overriding `output_dir` from the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Override a config value; may be repeated.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Worker threads for scans and variant batches.
    #[arg(long, global = true, env = "PESTCTL_THREADS")]
    threads: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Time series of the uncontrolled system.
    Simulate,
    /// Locate all equilibria.
    Equilibria,
    /// Equilibria with thresholds, Routh-Hurwitz verdicts and cross-checks.
    Stability,
    /// Scan Psi along an attack-rate grid and refine Hopf crossings.
    HopfScan,
    /// Coexistence branch and long-run attractor extremes along an attack-rate grid.
    Bifurcation,
    /// Forward-backward sweep for the optimal control problem.
    OptimalControl,
}

fn run(cli: &Cli) -> Result<Outcome, RunError> {
    let mut builder = match &cli.config {
        Some(path) => load_config(path)?,
        None => ConfigBuilder::new(),
    };
    for pair in &cli.set {
        builder.apply_override(pair)?;
    }
    let mut cfg = builder.finish()?;
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    print!("{}", cfg.echo());
    match cli.command {
        Command::Simulate => scenarios::run_simulate(&cfg),
        Command::Equilibria => scenarios::run_equilibria(&cfg),
        Command::Stability => scenarios::run_stability(&cfg),
        Command::HopfScan => scenarios::run_hopf_scan(&cfg),
        Command::Bifurcation => scenarios::run_bifurcation(&cfg),
        Command::OptimalControl => scenarios::run_optimal_control(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        pool = pool.num_threads(n);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker pool: {e}");
            return ExitCode::from(1);
        }
    };
    match pool.install(|| run(&cli)) {
        Ok(outcome) => {
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
            if let Some(msg) = &outcome.numeric_failure {
                eprintln!("error: cross-check failed: {msg}");
                return ExitCode::from(3);
            }
            if !outcome.converged {
                eprintln!("warning: iteration did not converge; best iterate written");
                return ExitCode::from(4);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
