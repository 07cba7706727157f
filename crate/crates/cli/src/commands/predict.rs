use std::path::PathBuf;

use anyhow::{Context, Result};
use rffgpc::TrainedModel;

use super::{load_unlabeled, write_lines, Input};

#[derive(clap::Args, Debug)]
pub struct Args {
    #[arg(long)]
    pub model: PathBuf,
    /// Rows to score; a label column, if present, is ignored.
    #[command(flatten)]
    pub input: Input,
    /// One value per line, no header, in input order.
    #[arg(long)]
    pub out: PathBuf,
    /// Write probabilities of class 1 instead of labels.
    #[arg(long)]
    pub proba: bool,
    #[arg(long, default_value_t = 0.5)]
    pub threshold: f64,
}

pub fn load_model(path: &PathBuf) -> Result<TrainedModel> {
    TrainedModel::load(path).with_context(|| format!("loading model {}", path.display()))
}

pub fn run(args: Args) -> Result<()> {
    let model = load_model(&args.model)?;
    let x = load_unlabeled(&args.input)?;
    if args.proba {
        let p = model.predict_proba(x.view()).context("--data")?;
        write_lines(&args.out, p.iter())?;
    } else {
        let labels = model.predict_label(x.view(), args.threshold).context("--data / --threshold")?;
        write_lines(&args.out, labels.iter())?;
    }
    Ok(())
}
