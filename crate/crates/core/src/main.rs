use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use winkler_lab::experiments::{execute, load_config, Command};
use winkler_lab::Error;

#[derive(Parser)]
#[command(
    name = "winkler-lab",
    version,
    about = "Plate-on-foundation stability experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Baseline solve, audits and the stability sweep.
    Run(Args),
    /// Forward solve only.
    Solve(Args),
    /// Reconstruct the coefficient from the baseline deflection.
    Reconstruct(Args),
    /// Baseline solve and audits without a sweep.
    Audit(Args),
}

#[derive(clap::Args)]
struct Args {
    /// JSON experiment configuration.
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Nodes per side of the shorter domain edge.
    #[arg(long)]
    resolution: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (cmd, args) = match cli.command {
        Cmd::Run(a) => (Command::Run, a),
        Cmd::Solve(a) => (Command::Solve, a),
        Cmd::Reconstruct(a) => (Command::Reconstruct, a),
        Cmd::Audit(a) => (Command::Audit, a),
    };
    let result = load_config(&args.config).and_then(|mut cfg| {
        if let Some(s) = args.seed {
            cfg.seed = s;
        }
        if let Some(w) = args.workers {
            cfg.workers = Some(w);
        }
        if let Some(o) = args.out {
            cfg.output.dir = o;
        }
        if let Some(n) = args.resolution {
            cfg.domain.n = n;
        }
        execute(cmd, &cfg)
    });
    match result {
        Ok(summary) => {
            if let Some(fit) = summary.get("fit") {
                println!("fit: {fit}");
            }
            ExitCode::SUCCESS
        }
        Err(e @ (Error::Config(_) | Error::Expression { .. })) => {
            eprintln!("{e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
