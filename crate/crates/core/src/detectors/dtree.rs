//! CART classification tree with Gini impurity.
//!
//! Candidate thresholds are midpoints between adjacent distinct values of a
//! feature; a row goes left when its value is `<=` the threshold. Split
//! quality is compared exactly in integer arithmetic, so ties are resolved
//! by the lowest feature index and then the lowest threshold, never by
//! rounding noise. A node becomes a leaf when it is pure, when the depth
//! budget is spent, or when no split lowers the impurity. Leaves predict the
//! majority class, with ties going to normal.

use std::cmp::Ordering;

use ndarray::{ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::abm::Label;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Node {
    Leaf {
        label: Label,
        n_normal: usize,
        n_suspicious: usize,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: Box<Node>,
        right: Box<Node>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub max_depth: usize,
    pub n_features: usize,
    pub root: Node,
}

/// Σ(class count²) / n for one child; lower impurity means a larger value.
#[derive(Clone, Copy)]
struct Purity {
    num: u128,
    den: u128,
}

impl Purity {
    fn of(counts: [usize; 2]) -> Self {
        let n = (counts[0] + counts[1]) as u128;
        let sq = (counts[0] as u128).pow(2) + (counts[1] as u128).pow(2);
        Purity {
            num: sq,
            den: n.max(1),
        }
    }

    fn add(self, other: Purity) -> Purity {
        Purity {
            num: self.num * other.den + other.num * self.den,
            den: self.den * other.den,
        }
    }

    fn cmp(&self, other: &Purity) -> Ordering {
        (self.num * other.den).cmp(&(other.num * self.den))
    }
}

struct Candidate {
    feature: usize,
    threshold: f64,
    purity: Purity,
}

impl DecisionTree {
    pub fn fit(x: ArrayView2<f64>, y: &[Label], max_depth: usize) -> Result<Self> {
        if x.nrows() == 0 || x.nrows() != y.len() {
            return Err(Error::Data(format!(
                "tree needs matching non-empty inputs, got {} rows and {} labels",
                x.nrows(),
                y.len()
            )));
        }
        if max_depth == 0 {
            return Err(Error::Parameter("max_depth must be at least 1".into()));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data("tree inputs must be finite".into()));
        }
        let rows: Vec<usize> = (0..x.nrows()).collect();
        Ok(Self {
            max_depth,
            n_features: x.ncols(),
            root: grow(x, y, rows, max_depth),
        })
    }

    pub fn predict_row(&self, row: ArrayView1<f64>) -> Label {
        let mut node = &self.root;
        loop {
            match node {
                Node::Leaf { label, .. } => return *label,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if row[*feature] <= *threshold {
                        left
                    } else {
                        right
                    };
                }
            }
        }
    }

    pub fn predict(&self, x: ArrayView2<f64>) -> Vec<Label> {
        x.rows().into_iter().map(|r| self.predict_row(r)).collect()
    }

    /// `(feature, threshold)` of every internal node, in pre-order.
    pub fn thresholds(&self) -> Vec<(usize, f64)> {
        fn walk(node: &Node, out: &mut Vec<(usize, f64)>) {
            if let Node::Split {
                feature,
                threshold,
                left,
                right,
            } = node
            {
                out.push((*feature, *threshold));
                walk(left, out);
                walk(right, out);
            }
        }
        let mut out = Vec::new();
        walk(&self.root, &mut out);
        out
    }

    pub fn leaf_count(&self) -> usize {
        fn count(node: &Node) -> usize {
            match node {
                Node::Leaf { .. } => 1,
                Node::Split { left, right, .. } => count(left) + count(right),
            }
        }
        count(&self.root)
    }
}

fn class_counts(y: &[Label], rows: &[usize]) -> [usize; 2] {
    let suspicious = rows.iter().filter(|&&r| y[r].is_suspicious()).count();
    [rows.len() - suspicious, suspicious]
}

fn leaf(counts: [usize; 2]) -> Node {
    Node::Leaf {
        label: if counts[1] > counts[0] {
            Label::Suspicious
        } else {
            Label::Normal
        },
        n_normal: counts[0],
        n_suspicious: counts[1],
    }
}

fn grow(x: ArrayView2<f64>, y: &[Label], rows: Vec<usize>, depth_left: usize) -> Node {
    let counts = class_counts(y, &rows);
    if depth_left == 0 || counts[0] == 0 || counts[1] == 0 {
        return leaf(counts);
    }
    let Some(best) = best_split(x, y, &rows) else {
        return leaf(counts);
    };
    // Only split when the children are strictly purer than the parent.
    if best.purity.cmp(&Purity::of(counts)) != Ordering::Greater {
        return leaf(counts);
    }
    let (left, right): (Vec<usize>, Vec<usize>) = rows
        .into_iter()
        .partition(|&r| x[[r, best.feature]] <= best.threshold);
    Node::Split {
        feature: best.feature,
        threshold: best.threshold,
        left: Box::new(grow(x, y, left, depth_left - 1)),
        right: Box::new(grow(x, y, right, depth_left - 1)),
    }
}

fn best_split(x: ArrayView2<f64>, y: &[Label], rows: &[usize]) -> Option<Candidate> {
    let total = class_counts(y, rows);
    let mut best: Option<Candidate> = None;
    for feature in 0..x.ncols() {
        let mut sorted: Vec<usize> = rows.to_vec();
        sorted.sort_by(|&a, &b| x[[a, feature]].total_cmp(&x[[b, feature]]));
        let mut left = [0usize; 2];
        for i in 0..sorted.len() - 1 {
            left[y[sorted[i]].is_suspicious() as usize] += 1;
            let here = x[[sorted[i], feature]];
            let next = x[[sorted[i + 1], feature]];
            if here == next {
                continue;
            }
            let right = [total[0] - left[0], total[1] - left[1]];
            let purity = Purity::of(left).add(Purity::of(right));
            // Strictly better only: earlier features and lower thresholds win ties.
            let better = best
                .as_ref()
                .is_none_or(|b| purity.cmp(&b.purity) == Ordering::Greater);
            if better {
                best = Some(Candidate {
                    feature,
                    threshold: here + (next - here) / 2.0,
                    purity,
                });
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};
    use proptest::prelude::*;
    use Label::*;

    #[test]
    fn separable_clusters_split_at_midpoint() {
        let x = array![[0.0], [1.0], [10.0], [11.0]];
        let y = [Normal, Normal, Suspicious, Suspicious];
        let tree = DecisionTree::fit(x.view(), &y, 1).unwrap();
        assert_eq!(tree.thresholds(), [(0, 5.5)]);
        assert_eq!(tree.predict(x.view()), y);
    }

    #[test]
    fn single_class_is_a_leaf() {
        let x = array![[0.0], [1.0], [2.0]];
        let tree = DecisionTree::fit(x.view(), &[Normal; 3], 3).unwrap();
        assert_eq!(tree.leaf_count(), 1);
        assert!(tree.thresholds().is_empty());
    }

    #[test]
    fn ties_prefer_lower_feature() {
        // Both columns separate the classes perfectly.
        let x = array![[0.0, 5.0], [1.0, 6.0], [2.0, 9.0], [3.0, 10.0]];
        let y = [Normal, Normal, Suspicious, Suspicious];
        let tree = DecisionTree::fit(x.view(), &y, 2).unwrap();
        assert_eq!(tree.thresholds(), [(0, 1.5)]);
    }

    #[test]
    fn ties_prefer_lower_threshold() {
        // Splitting at 0.5 or at 2.5 isolates one suspicious row either way.
        let x = array![[0.0], [1.0], [2.0], [3.0]];
        let y = [Suspicious, Normal, Normal, Suspicious];
        let tree = DecisionTree::fit(x.view(), &y, 1).unwrap();
        assert_eq!(tree.thresholds(), [(0, 0.5)]);
    }

    #[test]
    fn depth_two_captures_both_tails() {
        let x = array![[0.0], [1.0], [5.0], [6.0], [7.0], [11.0], [12.0]];
        let y = [
            Suspicious, Suspicious, Normal, Normal, Normal, Suspicious, Suspicious,
        ];
        let tree = DecisionTree::fit(x.view(), &y, 2).unwrap();
        assert_eq!(tree.predict(x.view()), y);
        assert!(tree.leaf_count() <= 4);
    }

    #[test]
    fn rejects_bad_inputs() {
        let x = array![[0.0], [1.0]];
        assert!(DecisionTree::fit(x.view(), &[Normal], 1).is_err());
        assert!(DecisionTree::fit(x.view(), &[Normal, Normal], 0).is_err());
        let empty = Array2::<f64>::zeros((0, 1));
        assert!(DecisionTree::fit(empty.view(), &[], 1).is_err());
        let nan = array![[f64::NAN], [1.0]];
        assert!(DecisionTree::fit(nan.view(), &[Normal, Suspicious], 1).is_err());
    }

    proptest! {
        #[test]
        fn beats_majority_baseline(
            rows in proptest::collection::vec((0u8..20, 0u8..20, any::<bool>()), 1..60),
            depth in 1usize..4,
        ) {
            let x = Array2::from_shape_fn((rows.len(), 2), |(i, j)| {
                if j == 0 { rows[i].0 as f64 } else { rows[i].1 as f64 }
            });
            let y: Vec<Label> = rows.iter().map(|r| if r.2 { Suspicious } else { Normal }).collect();
            let tree = DecisionTree::fit(x.view(), &y, depth).unwrap();
            let pred = tree.predict(x.view());
            let correct = pred.iter().zip(&y).filter(|(a, b)| a == b).count();
            let suspicious = y.iter().filter(|l| l.is_suspicious()).count();
            let majority = suspicious.max(y.len() - suspicious);
            prop_assert!(correct >= majority);
            prop_assert!(tree.leaf_count() <= 1 << depth);
        }
    }
}
