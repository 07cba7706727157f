use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use anyhow::{bail, Result};
use rffgpc::data::{balanced_sample, overall_accuracy};
use rffgpc::{fit, Dataset, Mode};

use super::{create, sibling, transformed, Input, Preprocess};

pub const HEADER: &str = "mode,n,D,seed,train_seconds,test_seconds,train_oa,test_oa,status";

#[derive(clap::Args, Debug)]
pub struct Args {
    #[command(flatten)]
    pub input: Input,
    /// Comma-separated balanced training sizes.
    #[arg(long, value_delimiter = ',', required = true)]
    pub grid_n: Vec<usize>,
    /// Comma-separated frequency counts.
    #[arg(long, value_delimiter = ',', required = true)]
    pub grid_d: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "rff,vff")]
    pub modes: Vec<Mode>,
    /// Independent balanced draws per cell, seeded `seed, seed + 1, …`.
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u64).range(1..))]
    pub repeats: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "none")]
    pub preprocess: Preprocess,
    #[arg(long, default_value_t = 50, value_parser = clap::value_parser!(u64).range(1..))]
    pub max_iters: u64,
    #[arg(long, default_value_t = 1e-5)]
    pub tol: f64,
    #[arg(long, default_value_t = 100)]
    pub max_evals: usize,
    /// CSV destination; run metadata goes to `<stem>.meta.txt` beside it.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkRow {
    pub mode: Mode,
    pub n: usize,
    pub num_freqs: usize,
    pub seed: u64,
    pub train_seconds: f64,
    pub test_seconds: f64,
    pub train_oa: f64,
    pub test_oa: f64,
}

fn accuracy(model: &rffgpc::TrainedModel, data: &Dataset) -> Result<(f64, f64)> {
    let start = Instant::now();
    let pred = model.predict_label(data.x.view(), 0.5)?;
    let seconds = start.elapsed().as_secs_f64();
    Ok((overall_accuracy(pred.view(), data.y.view())?, seconds))
}

fn cell(args: &Args, all: &Dataset, mode: Mode, n: usize, num_freqs: usize, seed: u64) -> Result<BenchmarkRow> {
    let (train_raw, test_raw) = balanced_sample(all, n, seed)?;
    if test_raw.is_empty() {
        bail!("no rows left for testing");
    }
    // Raw rows go to the model; it applies its own preprocessing.
    let spec = args.preprocess.fit(&train_raw.x)?;
    let train = transformed(&spec, &train_raw)?;
    let config = super::train::config(mode, num_freqs, seed, args.max_iters as usize, args.tol, args.max_evals)?;
    let start = Instant::now();
    let (model, _) = fit(&train, &config)?;
    let train_seconds = start.elapsed().as_secs_f64();
    let model = model.with_preprocessing(spec)?;
    let (train_oa, _) = accuracy(&model, &train_raw)?;
    let (test_oa, test_seconds) = accuracy(&model, &test_raw)?;
    Ok(BenchmarkRow {
        mode,
        n,
        num_freqs,
        seed,
        train_seconds,
        test_seconds,
        train_oa,
        test_oa,
    })
}

fn sorted_unique<T: Ord + Clone>(v: &[T]) -> Vec<T> {
    let mut v = v.to_vec();
    v.sort();
    v.dedup();
    v
}

pub fn run(args: Args, threads: usize) -> Result<()> {
    if args.grid_n.contains(&0) || args.grid_d.contains(&0) {
        bail!("--grid-n and --grid-d entries must be positive");
    }
    if !(args.tol > 0.0) {
        bail!("--tol must be positive, got {}", args.tol);
    }
    let all = args.input.load()?;
    let modes = sorted_unique(&args.modes);
    let grid_n = sorted_unique(&args.grid_n);
    let grid_d = sorted_unique(&args.grid_d);

    let mut out = csv::Writer::from_writer(create(&args.out)?);
    out.write_record(HEADER.split(','))?;
    let mut failures = 0;
    for &mode in &modes {
        for &n in &grid_n {
            for &nf in &grid_d {
                for r in 0..args.repeats {
                    let seed = args.seed.wrapping_add(r);
                    let record: Vec<String> = match cell(&args, &all, mode, n, nf, seed) {
                        Ok(row) => vec![
                            mode.to_string(),
                            n.to_string(),
                            nf.to_string(),
                            seed.to_string(),
                            format!("{:?}", row.train_seconds),
                            format!("{:?}", row.test_seconds),
                            format!("{:?}", row.train_oa),
                            format!("{:?}", row.test_oa),
                            "ok".into(),
                        ],
                        Err(e) => {
                            failures += 1;
                            log::warn!("cell mode={mode} n={n} D={nf} seed={seed} failed: {e:#}");
                            let mut v = vec![mode.to_string(), n.to_string(), nf.to_string(), seed.to_string()];
                            v.extend(std::iter::repeat_n(String::new(), 4));
                            v.push(format!("error: {e:#}"));
                            v
                        }
                    };
                    out.write_record(&record)?;
                    out.flush()?;
                }
            }
        }
    }
    out.flush()?;

    let meta_path = sibling(&args.out, "meta.txt");
    let mut meta = create(&meta_path)?;
    let join = |v: Vec<String>| v.join(",");
    writeln!(meta, "version={}", env!("CARGO_PKG_VERSION"))?;
    writeln!(meta, "data={}", args.input.data.display())?;
    writeln!(meta, "threads={threads}")?;
    writeln!(meta, "modes={}", join(modes.iter().map(Mode::to_string).collect()))?;
    writeln!(meta, "grid_n={}", join(grid_n.iter().map(usize::to_string).collect()))?;
    writeln!(meta, "grid_d={}", join(grid_d.iter().map(usize::to_string).collect()))?;
    writeln!(meta, "repeats={}", args.repeats)?;
    writeln!(meta, "seed={}", args.seed)?;
    writeln!(meta, "preprocess={:?}", args.preprocess)?;
    writeln!(meta, "max_iters={}", args.max_iters)?;
    writeln!(meta, "tol={:?}", args.tol)?;
    writeln!(meta, "max_evals={}", args.max_evals)?;
    writeln!(meta, "timing=wall-clock seconds around fit (train) and predict on the held-out rows (test); ingestion excluded")?;
    writeln!(meta, "failed_cells={failures}")?;
    meta.flush()?;
    println!("rows={}", modes.len() * grid_n.len() * grid_d.len() * args.repeats as usize);
    println!("failed_cells={failures}");
    Ok(())
}
