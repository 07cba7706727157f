use ndarray::ArrayView1;

use crate::error::{Error, Result};

fn check_lengths(pred: ArrayView1<u8>, truth: ArrayView1<u8>) -> Result<()> {
    if pred.len() != truth.len() {
        return Err(Error::domain(format!(
            "{} predictions for {} labels",
            pred.len(),
            truth.len()
        )));
    }
    if pred.is_empty() {
        return Err(Error::domain("accuracy of an empty set is undefined"));
    }
    Ok(())
}

/// Fraction of exact matches.
pub fn overall_accuracy(pred: ArrayView1<u8>, truth: ArrayView1<u8>) -> Result<f64> {
    check_lengths(pred, truth)?;
    let hits = pred.iter().zip(truth.iter()).filter(|(p, t)| p == t).count();
    Ok(hits as f64 / pred.len() as f64)
}

/// Binary confusion counts with class 1 as the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ConfusionCounts {
    pub tn: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tp: usize,
}

impl ConfusionCounts {
    pub fn tally(pred: ArrayView1<u8>, truth: ArrayView1<u8>) -> Result<Self> {
        check_lengths(pred, truth)?;
        let mut c = Self::default();
        for (&p, &t) in pred.iter().zip(truth.iter()) {
            match (p, t) {
                (0, 0) => c.tn += 1,
                (1, 0) => c.fp += 1,
                (0, 1) => c.fn_ += 1,
                _ => c.tp += 1,
            }
        }
        Ok(c)
    }

    pub fn total(&self) -> usize {
        self.tn + self.fp + self.fn_ + self.tp
    }

    pub fn overall_accuracy(&self) -> f64 {
        (self.tn + self.tp) as f64 / self.total() as f64
    }

    /// Recall of class 0; `None` when the class is absent.
    pub fn class0_accuracy(&self) -> Option<f64> {
        let n = self.tn + self.fp;
        (n > 0).then(|| self.tn as f64 / n as f64)
    }

    /// Recall of class 1; `None` when the class is absent.
    pub fn class1_accuracy(&self) -> Option<f64> {
        let n = self.tp + self.fn_;
        (n > 0).then(|| self.tp as f64 / n as f64)
    }
}
