use std::path::PathBuf;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use ndarray::Array1;
use rffgpc::data::ConfusionCounts;

use super::predict::load_model;
use super::Input;

#[derive(clap::Args, Debug)]
#[command(group(clap::ArgGroup::new("source").required(true).args(["model", "predictions"])))]
pub struct Args {
    /// Labeled test data.
    #[command(flatten)]
    pub input: Input,
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Precomputed labels, one per line, instead of a model.
    #[arg(long)]
    pub predictions: Option<PathBuf>,
    #[arg(long, default_value_t = 0.5)]
    pub threshold: f64,
}

fn read_predictions(path: &PathBuf) -> Result<Array1<u8>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .enumerate()
        .map(|(i, l)| match l {
            "0" => Ok(0),
            "1" => Ok(1),
            other => bail!("--predictions line {}: expected 0 or 1, got {other:?}", i + 1),
        })
        .collect()
}

pub fn run(args: Args) -> Result<()> {
    let data = args.input.load()?;
    if data.is_empty() {
        bail!("--data {} has no rows", args.input.data.display());
    }
    let (pred, seconds) = match (&args.model, &args.predictions) {
        (Some(path), _) => {
            let model = load_model(path)?;
            let start = Instant::now();
            let pred = model.predict_label(data.x.view(), args.threshold).context("--data")?;
            (pred, Some(start.elapsed().as_secs_f64()))
        }
        (None, Some(path)) => (read_predictions(path)?, None),
        (None, None) => unreachable!("clap enforces one source"),
    };
    let c = ConfusionCounts::tally(pred.view(), data.y.view()).context("--predictions")?;
    let fmt = |v: Option<f64>| v.map_or_else(|| "nan".to_string(), |a| format!("{a:?}"));
    println!("n={}", c.total());
    println!("OA={:?}", c.overall_accuracy());
    println!("acc_class0={}", fmt(c.class0_accuracy()));
    println!("acc_class1={}", fmt(c.class1_accuracy()));
    println!("TN={}", c.tn);
    println!("FP={}", c.fp);
    println!("FN={}", c.fn_);
    println!("TP={}", c.tp);
    if let Some(s) = seconds {
        println!("predict_seconds={s:?}");
    }
    Ok(())
}
