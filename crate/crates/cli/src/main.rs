use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use priroagg::harness::{bench_scaling, replay_file, run_experiment, write_outputs, BenchGrid, ExperimentConfig};

#[derive(Parser)]
#[command(name = "priroagg", version, about = "Secure robust aggregation experiments")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run an experiment and write metrics, timings and a transcript.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the seed in the config file.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Honest-run overhead scaling over a grid; prints a JSON report.
    Bench {
        #[arg(long)]
        grid: PathBuf,
    },
    /// Re-derive the server's decisions from a transcript.
    Replay {
        #[arg(long)]
        transcript: PathBuf,
    },
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.cmd {
        Cmd::Run { config, seed, out } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let res = run_experiment(&cfg)?;
            write_outputs(&cfg, &res, &out)?;
            for r in &res.records {
                eprintln!(
                    "iteration {}: {:?}, malicious {:?}, passes {}",
                    r.iteration, r.verdict, r.malicious_set, r.passes
                );
            }
            eprintln!("wrote {}", out.display());
        }
        Cmd::Bench { grid } => {
            let grid = BenchGrid::load(&grid)?;
            let report = bench_scaling(&grid)?;
            println!("{}", serde_json::to_string_pretty(&report).context("serializing report")?);
        }
        Cmd::Replay { transcript } => {
            for r in replay_file(&transcript)? {
                println!("{}", serde_json::to_string(&r).context("serializing report")?);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
