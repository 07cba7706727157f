//! `rffgpc`: train, apply and benchmark Fourier-feature GP classifiers.
//!
//! Exit codes: 0 success, 2 usage or data error, 3 numerical failure.

mod commands;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "rffgpc", version, about = "Gaussian-process classification with Fourier features")]
struct Cli {
    /// Worker threads for the linear algebra (defaults to all cores).
    #[arg(long, global = true, env = "RFFGPC_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a classifier and write the model plus its training trace.
    Train(commands::train::Args),
    /// Write one prediction per input row.
    Predict(commands::predict::Args),
    /// Print accuracy, confusion counts and prediction time.
    Evaluate(commands::evaluate::Args),
    /// Run the (mode, n, D, repeat) grid and write one CSV row per cell.
    Benchmark(commands::benchmark::Args),
    /// Compare the approximate kernel with the exact one for several D.
    KernelCheck(commands::kernel_check::Args),
    /// Write a seeded synthetic dataset as CSV.
    Generate(commands::generate::Args),
}

fn exit_code(err: &anyhow::Error) -> u8 {
    let numerical = err
        .chain()
        .filter_map(|c| c.downcast_ref::<rffgpc::Error>())
        .any(rffgpc::Error::is_numerical);
    if numerical {
        3
    } else {
        2
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot configure {n} threads: {e}");
            return ExitCode::from(2);
        }
    }
    let threads = rayon::current_num_threads();
    let result = match cli.command {
        Command::Train(a) => commands::train::run(a),
        Command::Predict(a) => commands::predict::run(a),
        Command::Evaluate(a) => commands::evaluate::run(a),
        Command::Benchmark(a) => commands::benchmark::run(a, threads),
        Command::KernelCheck(a) => commands::kernel_check::run(a),
        Command::Generate(a) => commands::generate::run(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
