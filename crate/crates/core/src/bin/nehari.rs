use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use coupled_nehari::cli::{exit_code, parse_config, run, Command, EXIT_USAGE, KEYS_HELP};

#[derive(Parser)]
#[command(name = "nehari", version, about = "Least energy solutions of coupled quasilinear elliptic systems", after_help = KEYS_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// Configuration file
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, overrides `output.dir`
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// RNG seed, overrides `solver.seed`
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Check the coefficient hypotheses of both families on sampled values
    Certify,
    /// Principal Dirichlet eigenpair of the grid Laplacian
    Eigen,
    /// Scalar ground states and levels of both components
    SolveScalar,
    /// Least energy solution of the coupled system
    SolveSystem,
    /// One system solve per value of `sweep.betas`
    Sweep,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE as u8 } else { 0 });
        }
    };
    let Some(path) = cli.config else {
        eprintln!("error: --config <path> is required");
        return ExitCode::from(EXIT_USAGE as u8);
    };
    let text = match std::fs::read_to_string(&path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", path.display());
            return ExitCode::from(EXIT_USAGE as u8);
        }
    };
    let mut cfg = match parse_config(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_USAGE as u8);
        }
    };
    if let Some(out) = cli.out {
        cfg.output_dir = out;
    }
    if let Some(seed) = cli.seed {
        cfg.solver.seed = seed;
    }
    let command = match cli.command {
        Cmd::Certify => Command::Certify,
        Cmd::Eigen => Command::Eigen,
        Cmd::SolveScalar => Command::SolveScalar,
        Cmd::SolveSystem => Command::SolveSystem,
        Cmd::Sweep => Command::Sweep,
    };
    match run(command, &cfg) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
