use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use attrib_eval::backends::TableOracle;
use attrib_eval_cli::commands::{
    run_agreement, run_chunk, run_claimsplit, run_stats, AgreementArgs, ChunkArgs, ClaimSplitArgs, StatsArgs,
};
use attrib_eval_cli::config::ENDPOINT_ENV;
use attrib_eval_cli::run::{run_evaluate, EvaluateArgs};
use clap::{Parser, Subcommand};
use tracing_subscriber::EnvFilter;

#[derive(Parser)]
#[command(name = "attrib-eval", version, about = "Evaluate attributed query-focused summaries")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score system summaries (or the references) and write reports.
    Evaluate(EvaluateArgs),
    /// Dataset statistics.
    Stats(StatsArgs),
    /// Re-chunk document content into passages.
    Chunk(ChunkArgs),
    /// Evaluator citations against human citations.
    Agreement(AgreementArgs),
    /// Redundancy, splits, correctness and completeness of a claim splitter.
    ClaimsplitQuality(ClaimSplitArgs),
    /// Serve an oracle fixture over the sidecar HTTP protocol.
    ServeOracle {
        #[arg(long)]
        oracle: PathBuf,
        #[arg(long, default_value = "127.0.0.1:8900")]
        addr: SocketAddr,
    },
}

fn serve_oracle(oracle: PathBuf, addr: SocketAddr) -> Result<()> {
    let table = TableOracle::load(&oracle).with_context(|| format!("loading {}", oracle.display()))?;
    tokio::runtime::Runtime::new()?.block_on(attrib_eval_cli::serve::serve(addr, table))
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("warn")))
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    let env = std::env::var(ENDPOINT_ENV).ok();
    let result = match cli.command {
        Command::Evaluate(args) => {
            return match args.resolve(env) {
                Ok(cfg) => {
                    let status = run_evaluate(&cfg);
                    eprintln!(
                        "{:?}: {}/{} evaluated, {} skipped, {} failed",
                        status.status,
                        status.evaluated,
                        status.samples,
                        status.skipped.len(),
                        status.failed.len()
                    );
                    ExitCode::from(status.status.exit_code() as u8)
                }
                Err(e) => {
                    eprintln!("error: {e:#}");
                    ExitCode::FAILURE
                }
            };
        }
        Command::Stats(args) => run_stats(&args, env),
        Command::Chunk(args) => run_chunk(&args, env),
        Command::Agreement(args) => run_agreement(&args, env),
        Command::ClaimsplitQuality(args) => run_claimsplit(&args, env),
        Command::ServeOracle { oracle, addr } => serve_oracle(oracle, addr),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
