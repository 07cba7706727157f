use std::path::PathBuf;

use anyhow::Result;
use rffgpc::data::{synthetic, write_csv};

#[derive(clap::ValueEnum, Clone, Copy, Debug)]
pub enum Kind {
    Blobs,
    Annulus,
    Anisotropic,
}

#[derive(clap::Args, Debug)]
pub struct Args {
    #[arg(long, value_enum)]
    pub kind: Kind,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub n: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Input dimension (anisotropic only).
    #[arg(long, default_value_t = 20, value_parser = clap::value_parser!(u64).range(2..))]
    pub dim: u64,
    /// Label-flip probability (anisotropic only).
    #[arg(long, default_value_t = 0.1)]
    pub flip: f64,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(args: Args) -> Result<()> {
    if !(0.0..=1.0).contains(&args.flip) {
        anyhow::bail!("--flip must lie in [0, 1], got {}", args.flip);
    }
    let n = args.n as usize;
    let data = match args.kind {
        Kind::Blobs => synthetic::two_blobs(n, args.seed),
        Kind::Annulus => synthetic::annulus(n, args.seed),
        Kind::Anisotropic => synthetic::anisotropic(n, args.dim as usize, args.flip, args.seed),
    };
    write_csv(&data, &args.out)?;
    Ok(())
}
