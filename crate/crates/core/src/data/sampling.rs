use ndarray::ArrayView1;

use super::Dataset;
use crate::error::{Error, Result};
use crate::rng::SeededRng;

/// Index partition for a balanced draw: `n_train / 2` rows of each class
/// without replacement. Training indices are returned in ascending order and
/// the remainder keeps the original order.
pub fn balanced_indices(y: ArrayView1<u8>, n_train: usize, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if n_train == 0 || n_train % 2 != 0 {
        return Err(Error::domain(format!(
            "balanced training size must be a positive even number, got {n_train}"
        )));
    }
    let per_class = n_train / 2;
    let mut rng = SeededRng::new(seed);
    let mut chosen = vec![false; y.len()];
    for class in [0u8, 1u8] {
        let members: Vec<usize> = y
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == class)
            .map(|(i, _)| i)
            .collect();
        if members.len() < per_class {
            return Err(Error::Data(format!(
                "class {class} has {} instances but {per_class} are needed (short by {})",
                members.len(),
                per_class - members.len()
            )));
        }
        for k in rng.sample_indices(members.len(), per_class) {
            chosen[members[k]] = true;
        }
    }
    let (train, rest): (Vec<usize>, Vec<usize>) = (0..y.len()).partition(|&i| chosen[i]);
    Ok((train, rest))
}

/// Balanced training subset and the untouched remainder.
pub fn balanced_sample(dataset: &Dataset, n_train: usize, seed: u64) -> Result<(Dataset, Dataset)> {
    let (train, rest) = balanced_indices(dataset.y.view(), n_train, seed)?;
    Ok((dataset.select(&train), dataset.select(&rest)))
}
