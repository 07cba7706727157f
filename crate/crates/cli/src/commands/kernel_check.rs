use std::io::Write;
use std::path::PathBuf;

use anyhow::{bail, Result};
use ndarray::Array1;
use rffgpc::rng::SeededRng;
use rffgpc::{approx_kernel, se_kernel, FrequencyBasis};

#[derive(clap::Args, Debug)]
pub struct Args {
    /// Input dimension d.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub dims: u64,
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    /// Comma-separated frequency counts.
    #[arg(long, value_delimiter = ',', default_value = "10,100,1000")]
    pub grid_d: Vec<usize>,
    /// Random input pairs per basis.
    #[arg(long, default_value_t = 20, value_parser = clap::value_parser!(u64).range(1..))]
    pub pairs: u64,
    /// Bases drawn per D, seeded `seed, seed + 1, …`.
    #[arg(long, default_value_t = 50, value_parser = clap::value_parser!(u64).range(1..))]
    pub seeds: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// CSV destination (standard output when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelErrorRow {
    pub num_freqs: usize,
    /// Mean of `|k̃/γ − k/γ|` over bases and pairs.
    pub mean_abs_error: f64,
    /// Largest `|k̃(x, x)/γ − 1|`.
    pub self_kernel_error: f64,
}

pub fn kernel_errors(args: &Args) -> Result<Vec<KernelErrorRow>> {
    if !(args.sigma > 0.0) || !(args.gamma > 0.0) {
        bail!("--sigma and --gamma must be positive");
    }
    if args.grid_d.is_empty() || args.grid_d.contains(&0) {
        bail!("--grid-d entries must be positive integers");
    }
    let d = args.dims as usize;
    // Pair inputs come from their own stream so every D sees the same pairs.
    let mut rng = SeededRng::new(args.seed ^ 0xA5A5_A5A5);
    let pairs: Vec<(Array1<f64>, Array1<f64>)> = (0..args.pairs)
        .map(|_| {
            let a = Array1::from_shape_simple_fn(d, || rng.normal());
            let b = Array1::from_shape_simple_fn(d, || rng.normal());
            (a, b)
        })
        .collect();
    let mut rows = Vec::with_capacity(args.grid_d.len());
    for &nf in &args.grid_d {
        let (mut total, mut worst_self) = (0.0, 0.0f64);
        for k in 0..args.seeds {
            let basis = FrequencyBasis::sample(nf, d, args.seed.wrapping_add(k))?;
            for (a, b) in &pairs {
                let exact = se_kernel(a.view(), b.view(), args.sigma, args.gamma)?;
                let approx = approx_kernel(a.view(), b.view(), &basis, args.sigma, args.gamma)?;
                total += ((approx - exact) / args.gamma).abs();
                let selfk = approx_kernel(a.view(), a.view(), &basis, args.sigma, args.gamma)?;
                worst_self = worst_self.max((selfk / args.gamma - 1.0).abs());
            }
        }
        rows.push(KernelErrorRow {
            num_freqs: nf,
            mean_abs_error: total / (args.seeds * args.pairs) as f64,
            self_kernel_error: worst_self,
        });
    }
    Ok(rows)
}

pub fn run(args: Args) -> Result<()> {
    let rows = kernel_errors(&args)?;
    let mut out: Box<dyn Write> = match &args.out {
        Some(p) => Box::new(super::create(p)?),
        None => Box::new(std::io::stdout().lock()),
    };
    writeln!(out, "D,mean_abs_error,self_kernel_error")?;
    for r in rows {
        writeln!(out, "{},{:?},{:?}", r.num_freqs, r.mean_abs_error, r.self_kernel_error)?;
    }
    out.flush()?;
    Ok(())
}
