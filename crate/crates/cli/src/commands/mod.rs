pub mod benchmark;
pub mod evaluate;
pub mod generate;
pub mod kernel_check;
pub mod predict;
pub mod train;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use ndarray::Array2;
use rffgpc::data::{fit_standardize, fit_standardize_pca, load_csv, load_features_csv, LabelColumn};
use rffgpc::{Dataset, TransformSpec};

/// Flags shared by every command that reads a labeled CSV.
#[derive(clap::Args, Debug, Clone)]
pub struct Input {
    /// CSV file ('.' decimal separator, comma-delimited).
    #[arg(long)]
    pub data: PathBuf,
    /// Label column: a header name or a zero-based index.
    #[arg(long, default_value = "label")]
    pub label_col: String,
    /// The file has no header row (select the label by index).
    #[arg(long)]
    pub no_header: bool,
}

impl Input {
    pub fn load(&self) -> Result<Dataset> {
        let label = self.label_column();
        if self.no_header && matches!(label, LabelColumn::Name(_)) {
            bail!(
                "--label-col {:?} names a column but --no-header was given; pass a zero-based index",
                self.label_col
            );
        }
        load_csv(&self.data, &label, !self.no_header).with_context(|| format!("reading {}", self.data.display()))
    }

    pub fn label_column(&self) -> LabelColumn {
        LabelColumn::from_str(&self.label_col).expect("infallible")
    }
}

/// `none`, `standardize` or `standardize-pca:K`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preprocess {
    None,
    Standardize,
    StandardizePca(usize),
}

impl FromStr for Preprocess {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "none" => Ok(Self::None),
            "standardize" => Ok(Self::Standardize),
            other => {
                let k = other
                    .strip_prefix("standardize-pca:")
                    .ok_or_else(|| format!("expected none, standardize or standardize-pca:K, got {other:?}"))?;
                match k.parse::<usize>() {
                    Ok(k) if k >= 1 => Ok(Self::StandardizePca(k)),
                    _ => Err(format!("PCA dimension must be a positive integer, got {k:?}")),
                }
            }
        }
    }
}

impl Preprocess {
    pub fn fit(self, x: &Array2<f64>) -> Result<TransformSpec> {
        Ok(match self {
            Self::None => TransformSpec::identity(x.ncols()),
            Self::Standardize => fit_standardize(x.view()),
            Self::StandardizePca(k) => fit_standardize_pca(x.view(), k).context("--preprocess")?,
        })
    }
}

/// Inputs mapped through `spec`, labels unchanged.
pub fn transformed(spec: &TransformSpec, data: &Dataset) -> Result<Dataset> {
    Ok(Dataset::new(spec.apply(data.x.view())?, data.y.clone(), None)?)
}

/// Feature matrix for prediction. The label column is dropped when the file
/// has one; otherwise every column is a feature.
pub fn load_unlabeled(input: &Input) -> Result<Array2<f64>> {
    let label = input.label_column();
    let exclude = match &label {
        LabelColumn::Name(name) => (!input.no_header && header_contains(&input.data, name)?).then_some(&label),
        LabelColumn::Index(_) => Some(&label),
    };
    load_features_csv(&input.data, exclude, !input.no_header)
        .with_context(|| format!("reading {}", input.data.display()))
}

fn header_contains(path: &Path, name: &str) -> Result<bool> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("reading {}", path.display()))?;
    Ok(reader.headers()?.iter().any(|h| h == name))
}

pub fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

pub fn write_lines<T: std::fmt::Debug>(path: &Path, values: impl IntoIterator<Item = T>) -> Result<()> {
    let mut out = create(path)?;
    for v in values {
        writeln!(out, "{v:?}")?;
    }
    out.flush()?;
    Ok(())
}

/// `model.json` → `model.trace.csv`.
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.{suffix}"))
}
