//! Outlier detectors: a CART decision tree (supervised), a diagonal Gaussian
//! mixture fitted by EM, and an isolation forest (both unsupervised).
//!
//! Inputs are row-major `ndarray` matrices with one row per sample. All
//! randomness is seeded, so a detector given the same data, parameters and
//! seed always produces the same result.

pub mod dtree;
pub mod gmm;
pub mod iforest;

pub use dtree::DecisionTree;
pub use gmm::{ComponentRule, GaussianMixture, GmmParams};
pub use iforest::{IsolationForest, IsolationForestParams};

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::rng;

/// Row indices for a seeded train/test split. Detectors are evaluated on
/// their training data unless a holdout is requested.
pub fn train_test_split(
    n: usize,
    test_fraction: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::Parameter(format!(
            "test fraction {test_fraction} outside (0, 1)"
        )));
    }
    let n_test = ((n as f64) * test_fraction).round() as usize;
    if n_test == 0 || n_test == n {
        return Err(Error::Data(format!(
            "cannot split {n} rows with test fraction {test_fraction}"
        )));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng::stream(seed));
    let mut test = idx.split_off(n - n_test);
    idx.sort_unstable();
    test.sort_unstable();
    Ok((idx, test))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_partitions_rows() {
        let (train, test) = train_test_split(100, 0.25, 3).unwrap();
        assert_eq!(train.len(), 75);
        assert_eq!(test.len(), 25);
        let mut all: Vec<usize> = train.iter().chain(&test).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..100).collect::<Vec<_>>());
        assert_eq!(train_test_split(100, 0.25, 3).unwrap().1, test);
    }

    #[test]
    fn split_rejects_degenerate_fractions() {
        assert!(train_test_split(10, 0.0, 1).is_err());
        assert!(train_test_split(10, 1.0, 1).is_err());
        assert!(train_test_split(1, 0.3, 1).is_err());
    }
}
