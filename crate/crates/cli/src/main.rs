//! `tieq`: relaxed equilibria of time-inconsistent MDPs from JSON configs.
//!
//! Exit status: 0 on success, 2 when the run completes but its check fails
//! (no convergence, certificate rejected), 1 on any error.

mod config;
mod output;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Instant, SystemTime};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use tieq_core::{builtin, save_model};

use config::{Command, RunConfig};

#[derive(Parser)]
#[command(name = "tieq", version, about = "Relaxed equilibria of time-inconsistent Markov decision processes")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Entropy-regularized fixed point at a single λ.
    Solve(RunArgs),
    /// Anneal λ to zero and certify the limit policy.
    Anneal(RunArgs),
    /// Discretize a continuous-time model at decreasing steps and compare.
    Bridge(RunArgs),
    /// Certify a given policy and run the applicable oracles.
    Verify(RunArgs),
    /// Enumerate standard equilibria on the action grid.
    Scan(RunArgs),
    /// Write the bundled two-state example model.
    Example(ExampleArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides the config's `out`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExampleArgs {
    /// Model file to write.
    #[arg(long)]
    out: PathBuf,
    /// Grid nodes on [0, 1], endpoints included.
    #[arg(long, default_value_t = 33)]
    per_dim: usize,
}

fn init_threads() -> Result<()> {
    if let Ok(v) = std::env::var("TIEQ_THREADS") {
        let n: usize = v.trim().parse().with_context(|| format!("TIEQ_THREADS={v} is not a count"))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("cannot size the thread pool")?;
    }
    Ok(())
}

fn execute(command: Command, args: &RunArgs) -> Result<i32> {
    let started = SystemTime::now();
    let clock = Instant::now();
    let cfg = RunConfig::load(&args.config)?;
    let out = args
        .out
        .clone()
        .or_else(|| cfg.out.clone())
        .unwrap_or_else(|| PathBuf::from("out").join(command.name()));
    let outcome = run::run(command, &cfg)?;
    let code = if outcome.passed { 0 } else { 2 };
    output::write_artifacts(&out, &outcome.artifacts)?;
    output::write_meta(&out, command.name(), &args.config, started, clock.elapsed(), code)?;
    println!(
        "{}: {} -> {}",
        command.name(),
        if outcome.passed { "ok" } else { "check failed" },
        out.display()
    );
    Ok(code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = init_threads().and_then(|_| match &cli.command {
        Cmd::Solve(a) => execute(Command::Solve, a),
        Cmd::Anneal(a) => execute(Command::Anneal, a),
        Cmd::Bridge(a) => execute(Command::Bridge, a),
        Cmd::Verify(a) => execute(Command::Verify, a),
        Cmd::Scan(a) => execute(Command::Scan, a),
        Cmd::Example(a) => {
            if a.per_dim < 2 {
                anyhow::bail!("--per-dim must be at least 2");
            }
            save_model(&builtin::two_state_example(a.per_dim), &a.out)?;
            println!("example: wrote {}", a.out.display());
            Ok(0)
        }
    });
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
