//! Datasets, CSV ingestion, preprocessing transforms, balanced sampling and
//! accuracy metrics.

mod csv_io;
pub mod metrics;
pub mod sampling;
pub mod synthetic;
pub mod transform;

use ndarray::{Array1, Array2, Axis};

use crate::error::{Error, Result};

pub use csv_io::{load_csv, load_features_csv, write_csv, LabelColumn};
pub use metrics::{overall_accuracy, ConfusionCounts};
pub use sampling::{balanced_indices, balanced_sample};
pub use transform::{
    explained_variance_ratio, fit_pca, fit_standardize, fit_standardize_pca, TransformKind, TransformSpec,
};

/// `n × d` features with binary labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub x: Array2<f64>,
    pub y: Array1<u8>,
    pub feature_names: Option<Vec<String>>,
}

impl Dataset {
    /// Validates finiteness, label range and shapes.
    pub fn new(x: Array2<f64>, y: Array1<u8>, feature_names: Option<Vec<String>>) -> Result<Self> {
        if x.nrows() != y.len() {
            return Err(Error::Data(format!(
                "{} feature rows but {} labels",
                x.nrows(),
                y.len()
            )));
        }
        if let Some(names) = &feature_names {
            if names.len() != x.ncols() {
                return Err(Error::Data(format!(
                    "{} feature names for {} columns",
                    names.len(),
                    x.ncols()
                )));
            }
        }
        if let Some(((r, c), v)) = x.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::Data(format!("non-finite value {v} at row {r}, column {c}")));
        }
        if let Some(bad) = y.iter().find(|&&l| l > 1) {
            return Err(Error::Data(format!("label {bad} is not 0 or 1")));
        }
        Ok(Self { x, y, feature_names })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.x.ncols()
    }

    /// `(class-0 count, class-1 count)`.
    pub fn class_counts(&self) -> (usize, usize) {
        let ones = self.y.iter().filter(|&&l| l == 1).count();
        (self.len() - ones, ones)
    }

    /// Rows at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Self {
        Self {
            x: self.x.select(Axis(0), indices),
            y: self.y.select(Axis(0), indices),
            feature_names: self.feature_names.clone(),
        }
    }
}
