//! `radsgd`: command-line driver for the random-access D-SGD simulator.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use radsgd_core::experiments::{self, ExperimentConfig, Written};
use radsgd_core::Error;

#[derive(Parser)]
#[command(name = "radsgd", version, about = "Decentralized SGD over a slotted random-access channel")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Expected throughput and consensus rate over the access probability.
    Analyze(Common),
    /// Train every (access probability, replicate) pair and collect metrics.
    Sweep(Common),
    /// Train a single run at one access probability.
    Train(Common),
    /// Write the graph as an edge list plus a degree and spectrum report.
    Topology(Common),
}

#[derive(Args)]
struct Common {
    /// Experiment config file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides `out_dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; defaults to the number of CPUs.
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    parallel: Option<u32>,
    /// Master seed (overrides `seed`).
    #[arg(long)]
    seed: Option<u64>,
    /// Also write SVG plots.
    #[arg(long)]
    plots: bool,
}

enum Failure {
    Config(Error),
    Runtime(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_config_error() {
            Failure::Config(e)
        } else {
            Failure::Runtime(e)
        }
    }
}

fn load(common: &Common) -> Result<ExperimentConfig, Failure> {
    // a missing or unreadable config file is a configuration problem
    let mut cfg = ExperimentConfig::load(&common.config).map_err(Failure::Config)?;
    if let Some(out) = &common.out {
        cfg.out_dir = out.clone();
    }
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    cfg.plots |= common.plots;
    Ok(cfg)
}

fn print_written(w: &Written) {
    for f in &w.files {
        println!("wrote {}", f.display());
    }
}

fn run(command: Command) -> Result<(), Failure> {
    let common = match &command {
        Command::Analyze(c) | Command::Sweep(c) | Command::Train(c) | Command::Topology(c) => c,
    };
    let cfg = load(common)?;
    let threads = common
        .parallel
        .map(|k| k as usize)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));

    experiments::with_threads(threads, || -> Result<(), Failure> {
        match &command {
            Command::Analyze(_) => {
                let report = experiments::analyze(&cfg)?;
                let w = experiments::write_analysis(&report, &cfg.out_dir, cfg.plots)?;
                print!("{}", report.summary());
                print_written(&w);
            }
            Command::Sweep(_) => {
                let result = experiments::sweep(&cfg)?;
                let w = experiments::write_sweep(&result, &cfg.out_dir, cfg.plots)?;
                print!("{}", result.summary_csv());
                for e in &result.errors {
                    eprintln!("run p={} replicate={} failed: {}", e.p, e.replicate, e.message);
                }
                print_written(&w);
            }
            Command::Train(_) => {
                let (p, trace) = experiments::train(&cfg)?;
                let w = experiments::write_train(&trace, &cfg.out_dir, cfg.plots)?;
                if let Some(last) = trace.last() {
                    println!("p = {p}");
                    println!("iterations = {}", last.iteration);
                    println!("final_avg_test_loss = {}", last.avg_test_loss);
                    if let Some(acc) = last.accuracy {
                        println!("final_accuracy = {acc}");
                    }
                    println!("final_consensus_distance = {}", last.consensus_distance);
                }
                print_written(&w);
            }
            Command::Topology(_) => {
                let report = experiments::topology(&cfg)?;
                let w = experiments::write_topology(&report, &cfg.out_dir)?;
                print!("{}", report.render());
                print_written(&w);
            }
        }
        Ok(())
    })?
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("config error: {e}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
