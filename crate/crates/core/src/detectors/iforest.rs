//! Isolation forest.
//!
//! Each tree is grown on a subsample drawn without replacement. A node picks
//! a feature uniformly among those that are not constant within the node and
//! a split value uniformly in that feature's open range; rows with values
//! below the split go left. Growth stops at a single row, at constant data,
//! or at the depth limit `ceil(log2(subsample_size))`.
//!
//! The path length of a point is its leaf depth plus `c(leaf size)`, the
//! average unsuccessful-search length of a binary search tree:
//! `c(n) = 2 H(n - 1) - 2 (n - 1) / n` with `H(i) ~ ln(i) + 0.5772156649`,
//! `c(2) = 1` and `c(n <= 1) = 0`. The anomaly score is
//! `2^(-E[h(x)] / c(subsample_size))`.
//!
//! Exactly `ceil(contamination * N)` rows are flagged: those with the
//! highest scores, earlier rows first among equal scores. On constant data
//! every score is equal, so the first rows are flagged.

use ndarray::{ArrayView1, ArrayView2};
use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, Stream};

const EULER_GAMMA: f64 = 0.577_215_664_9;

/// Average path length of an unsuccessful search in a BST of `n` nodes.
pub fn average_path_length(n: usize) -> f64 {
    match n {
        0 | 1 => 0.0,
        2 => 1.0,
        _ => {
            let m = (n - 1) as f64;
            2.0 * (m.ln() + EULER_GAMMA) - 2.0 * m / n as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsolationForestParams {
    pub n_trees: usize,
    /// Rows per tree; `None` means `min(256, N)`.
    pub subsample_size: Option<usize>,
    pub contamination: f64,
    /// Depth cap; `None` means `ceil(log2(subsample_size))`.
    pub max_depth: Option<usize>,
    pub seed: u64,
}

impl Default for IsolationForestParams {
    fn default() -> Self {
        Self {
            n_trees: 100,
            subsample_size: None,
            contamination: 0.1,
            max_depth: None,
            seed: crate::DEFAULT_SEED,
        }
    }
}

impl IsolationForestParams {
    fn validate(&self) -> Result<()> {
        if !(self.contamination > 0.0 && self.contamination <= 0.5) {
            return Err(Error::Parameter(format!(
                "contamination {} outside (0, 0.5]",
                self.contamination
            )));
        }
        if self.n_trees == 0 {
            return Err(Error::Parameter("n_trees must be at least 1".into()));
        }
        if self.subsample_size == Some(0) || self.subsample_size == Some(1) {
            return Err(Error::Parameter("subsample_size must be at least 2".into()));
        }
        Ok(())
    }
}

/// Node of an isolation tree. Children are indices into the node list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum INode {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        size: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsolationTree {
    /// Pre-order; the root is node 0.
    pub nodes: Vec<INode>,
    /// Rows of the training matrix this tree was grown on.
    pub sample: Vec<usize>,
}

impl IsolationTree {
    pub fn grow(
        x: ArrayView2<f64>,
        sample: Vec<usize>,
        max_depth: usize,
        stream: &mut Stream,
    ) -> Self {
        let mut nodes = Vec::new();
        grow_node(x, &sample, 0, max_depth, stream, &mut nodes);
        Self { nodes, sample }
    }

    /// Leaf depth plus the size adjustment of the leaf reached.
    pub fn path_length(&self, row: ArrayView1<f64>) -> f64 {
        let mut i = 0;
        let mut depth = 0usize;
        loop {
            match &self.nodes[i] {
                INode::Leaf { size } => return depth as f64 + average_path_length(*size),
                INode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    i = if row[*feature] < *threshold {
                        *left
                    } else {
                        *right
                    };
                    depth += 1;
                }
            }
        }
    }
}

fn grow_node(
    x: ArrayView2<f64>,
    rows: &[usize],
    depth: usize,
    max_depth: usize,
    stream: &mut Stream,
    nodes: &mut Vec<INode>,
) -> usize {
    let id = nodes.len();
    nodes.push(INode::Leaf { size: rows.len() });
    if rows.len() <= 1 || depth >= max_depth {
        return id;
    }

    let ranges: Vec<(usize, f64, f64)> = (0..x.ncols())
        .filter_map(|f| {
            let (lo, hi) = rows
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &r| {
                    (lo.min(x[[r, f]]), hi.max(x[[r, f]]))
                });
            (lo < hi).then_some((f, lo, hi))
        })
        .collect();
    if ranges.is_empty() {
        return id;
    }
    let (feature, lo, hi) = ranges[stream.random_range(0..ranges.len())];
    let mut threshold = lo;
    while threshold <= lo {
        threshold = stream.random_range(lo..hi);
    }

    // Stable partition keeps child row order independent of the split draw.
    let (left, right): (Vec<usize>, Vec<usize>) =
        rows.iter().partition(|&&r| x[[r, feature]] < threshold);
    let left_id = grow_node(x, &left, depth + 1, max_depth, stream, nodes);
    let right_id = grow_node(x, &right, depth + 1, max_depth, stream, nodes);
    nodes[id] = INode::Split {
        feature,
        threshold,
        left: left_id,
        right: right_id,
    };
    id
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsolationForest {
    pub trees: Vec<IsolationTree>,
    pub subsample_size: usize,
    pub contamination: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IForestOutput {
    pub scores: Vec<f64>,
    pub flags: Vec<bool>,
}

impl IsolationForest {
    pub fn fit(x: ArrayView2<f64>, params: &IsolationForestParams) -> Result<Self> {
        params.validate()?;
        let n = x.nrows();
        if n < 2 {
            return Err(Error::Data(format!(
                "isolation forest needs at least 2 rows, got {n}"
            )));
        }
        if x.ncols() == 0 {
            return Err(Error::Data("no feature columns".into()));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data("isolation forest inputs must be finite".into()));
        }
        let psi = params.subsample_size.unwrap_or(256).min(n);
        let max_depth = params
            .max_depth
            .unwrap_or_else(|| (psi as f64).log2().ceil() as usize);

        // Every tree owns a stream derived up front, so trees can be grown in
        // any order with identical results.
        let trees = (0..params.n_trees)
            .map(|t| {
                let mut stream = rng::stream(rng::derive_seed(params.seed, t as u64));
                let mut sample = index::sample(&mut stream, n, psi).into_vec();
                sample.sort_unstable();
                IsolationTree::grow(x, sample, max_depth, &mut stream)
            })
            .collect();
        Ok(Self {
            trees,
            subsample_size: psi,
            contamination: params.contamination,
        })
    }

    pub fn mean_path_length(&self, row: ArrayView1<f64>) -> f64 {
        let total: f64 = self.trees.iter().map(|t| t.path_length(row)).sum();
        total / self.trees.len() as f64
    }

    pub fn score_row(&self, row: ArrayView1<f64>) -> f64 {
        let norm = average_path_length(self.subsample_size);
        2f64.powf(-self.mean_path_length(row) / norm)
    }

    pub fn score(&self, x: ArrayView2<f64>) -> Vec<f64> {
        x.rows().into_iter().map(|r| self.score_row(r)).collect()
    }

    pub fn score_and_flag(&self, x: ArrayView2<f64>) -> IForestOutput {
        let scores = self.score(x);
        let flags = flag_top(&scores, self.contamination);
        IForestOutput { scores, flags }
    }
}

/// Number of rows flagged at a contamination level. A tiny slack absorbs
/// products such as `0.1 * 1010` that land a rounding error above an integer.
pub fn flag_count(contamination: f64, n: usize) -> usize {
    ((contamination * n as f64 - 1e-9).ceil().max(0.0) as usize).min(n)
}

/// Flags the `flag_count` highest scores, earlier rows first on ties.
pub fn flag_top(scores: &[f64], contamination: f64) -> Vec<bool> {
    let k = flag_count(contamination, scores.len());
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut flags = vec![false; scores.len()];
    for &i in &order[..k] {
        flags[i] = true;
    }
    flags
}

pub fn iforest_fit_score(
    x: ArrayView2<f64>,
    params: &IsolationForestParams,
) -> Result<(IsolationForest, IForestOutput)> {
    let forest = IsolationForest::fit(x, params)?;
    let out = forest.score_and_flag(x);
    Ok((forest, out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    #[test]
    fn normalizer_values() {
        assert_eq!(average_path_length(1), 0.0);
        assert_eq!(average_path_length(2), 1.0);
        let c256 = average_path_length(256);
        assert!((c256 - 10.244_770_920_383_9).abs() < 1e-9, "{c256}");
    }

    #[test]
    fn flags_exact_count() {
        let scores: Vec<f64> = (0..1010).map(|i| (i % 37) as f64).collect();
        assert_eq!(flag_top(&scores, 0.1).iter().filter(|&&f| f).count(), 101);
        assert_eq!(flag_top(&scores, 0.01).iter().filter(|&&f| f).count(), 11);
        assert_eq!(flag_count(0.1, 1010), 101);
        assert_eq!(flag_count(0.5, 3), 2);
    }

    #[test]
    fn constant_matrix_flags_first_rows() {
        let x = Array2::from_elem((20, 2), 1.5);
        let params = IsolationForestParams {
            contamination: 0.1,
            ..IsolationForestParams::default()
        };
        let (_, out) = iforest_fit_score(x.view(), &params).unwrap();
        assert!(out.scores.iter().all(|&s| s == out.scores[0]));
        assert!((out.scores[0] - 0.5).abs() < 1e-12);
        let flagged: Vec<usize> = (0..20).filter(|&i| out.flags[i]).collect();
        assert_eq!(flagged, [0, 1]);
    }

    #[test]
    fn far_point_scores_highest() {
        let mut s = rng::stream(11);
        let mut v: Vec<f64> = (0..100).map(|_| s.random::<f64>()).collect();
        v.push(1000.0);
        let x = Array2::from_shape_vec((101, 1), v).unwrap();
        let (_, out) = iforest_fit_score(x.view(), &IsolationForestParams::default()).unwrap();
        let top = (0..101)
            .max_by(|&a, &b| out.scores[a].total_cmp(&out.scores[b]))
            .unwrap();
        assert_eq!(top, 100);
        assert!(out.flags[100]);
        assert!(out.scores.iter().all(|&s| s > 0.0 && s < 1.0));
    }

    #[test]
    fn rejects_bad_params() {
        let x = Array2::from_elem((5, 1), 0.0);
        for c in [0.0, 0.6, f64::NAN] {
            let params = IsolationForestParams {
                contamination: c,
                ..IsolationForestParams::default()
            };
            assert!(IsolationForest::fit(x.view(), &params).is_err());
        }
        let one = Array2::from_elem((1, 1), 0.0);
        assert!(IsolationForest::fit(one.view(), &IsolationForestParams::default()).is_err());
    }

    #[test]
    fn depth_limit_respected() {
        let mut s = rng::stream(2);
        let x = Array2::from_shape_fn((300, 3), |_| s.random::<f64>());
        let forest = IsolationForest::fit(x.view(), &IsolationForestParams::default()).unwrap();
        assert_eq!(forest.subsample_size, 256);
        for tree in &forest.trees {
            for r in x.rows() {
                let h = tree.path_length(r);
                // depth <= 8 plus at most c(256)
                assert!(h <= 8.0 + average_path_length(256));
            }
            let leaf_total: usize = tree
                .nodes
                .iter()
                .map(|n| match n {
                    INode::Leaf { size } => *size,
                    _ => 0,
                })
                .sum();
            assert_eq!(leaf_total, 256);
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let mut s = rng::stream(8);
        let x = Array2::from_shape_fn((64, 2), |_| s.random::<f64>());
        let a = IsolationForest::fit(x.view(), &IsolationForestParams::default()).unwrap();
        let b = IsolationForest::fit(x.view(), &IsolationForestParams::default()).unwrap();
        assert_eq!(a, b);
    }
}
