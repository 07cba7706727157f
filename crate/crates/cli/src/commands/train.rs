use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use anyhow::{Context, Result};
use rffgpc::data::balanced_sample;
use rffgpc::{fit, Mode, TrainConfig};

use super::{create, sibling, transformed, Input, Preprocess};

#[derive(clap::Args, Debug)]
pub struct Args {
    #[command(flatten)]
    pub input: Input,
    #[arg(long, default_value = "rff")]
    pub mode: Mode,
    /// Number of Fourier frequencies D.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub num_freqs: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "none")]
    pub preprocess: Preprocess,
    /// Model file to write; the trace goes to `<stem>.trace.csv` beside it.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 50, value_parser = clap::value_parser!(u64).range(1..))]
    pub max_iters: u64,
    /// Relative change of log F that stops training.
    #[arg(long, default_value_t = 1e-5)]
    pub tol: f64,
    /// Train on a balanced subsample of this many rows.
    #[arg(long)]
    pub balanced: Option<usize>,
    /// Objective evaluations per conjugate-gradient run.
    #[arg(long, default_value_t = 100)]
    pub max_evals: usize,
    /// Seed of the balanced draw (defaults to --seed).
    #[arg(long)]
    pub sample_seed: Option<u64>,
    /// Penalize ‖V‖² in VFF mode.
    #[arg(long)]
    pub ridge: bool,
}

pub fn config(mode: Mode, num_freqs: usize, seed: u64, max_iters: usize, tol: f64, max_evals: usize) -> Result<TrainConfig> {
    let mut config = TrainConfig::new(mode, num_freqs, seed);
    config.max_outer_iters = max_iters;
    config.rel_tol = tol;
    config.optimizer.max_evals = max_evals;
    config.validate().context("training flags (--num-freqs, --max-iters, --tol)")?;
    Ok(config)
}

pub fn run(args: Args) -> Result<()> {
    if !(args.tol > 0.0) {
        anyhow::bail!("--tol must be positive, got {}", args.tol);
    }
    let mut config = config(
        args.mode,
        args.num_freqs as usize,
        args.seed,
        args.max_iters as usize,
        args.tol,
        args.max_evals,
    )?;
    config.ridge_on_v = args.ridge;
    let mut data = args.input.load()?;
    if let Some(n) = args.balanced {
        data = balanced_sample(&data, n, args.sample_seed.unwrap_or(args.seed))
            .context("--balanced")?
            .0;
    }
    let spec = args.preprocess.fit(&data.x)?;
    let train = transformed(&spec, &data)?;

    let start = Instant::now();
    let (model, trace) = fit(&train, &config)?;
    let seconds = start.elapsed().as_secs_f64();
    let model = model.with_preprocessing(spec)?;
    model.save(&args.out).with_context(|| format!("writing {}", args.out.display()))?;

    let trace_path = sibling(&args.out, "trace.csv");
    let mut out = create(&trace_path)?;
    writeln!(out, "iteration,log_f,gamma,elapsed_seconds")?;
    for r in &trace.records {
        writeln!(out, "{},{:?},{:?},{:?}", r.iteration, r.log_f, r.gamma, r.elapsed_seconds)?;
    }
    out.flush()?;

    println!("model={}", args.out.display());
    println!("trace={}", trace_path.display());
    println!("n_train={}", train.len());
    println!("status={:?}", trace.status);
    println!("outer_iters={}", trace.outer_iters());
    println!("final_log_f={:?}", model.train_meta.final_log_f);
    println!("single_class={}", trace.single_class);
    println!("train_seconds={seconds:?}");
    Ok(())
}
