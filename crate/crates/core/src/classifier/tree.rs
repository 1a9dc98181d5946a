//! CART decision trees with Gini splits and bootstrap bagging.
//!
//! Labels are booleans (`true` = GoodGait); trees store the good-class
//! fraction at each leaf and the bagged score is the mean over trees.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub const N_FEATURES: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TreeNode {
    Leaf {
        p_good: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
}

impl TreeNode {
    pub fn score(&self, x: &[f64; N_FEATURES]) -> f64 {
        match self {
            TreeNode::Leaf { p_good } => *p_good,
            TreeNode::Split {
                feature,
                threshold,
                left,
                right,
            } => {
                if x[*feature] <= *threshold {
                    left.score(x)
                } else {
                    right.score(x)
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaggedTrees {
    pub trees: Vec<TreeNode>,
}

impl BaggedTrees {
    pub fn score(&self, x: &[f64; N_FEATURES]) -> f64 {
        self.trees.iter().map(|t| t.score(x)).sum::<f64>() / self.trees.len() as f64
    }
}

fn gini(n_good: usize, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let p = n_good as f64 / n as f64;
    1.0 - p * p - (1.0 - p) * (1.0 - p)
}

struct Split {
    feature: usize,
    threshold: f64,
    impurity: f64,
}

/// Best split by weighted Gini impurity; fixed scan order (feature index
/// ascending, threshold ascending) makes ties deterministic.
fn best_split(features: &[[f64; N_FEATURES]], labels: &[bool], idx: &[usize]) -> Option<Split> {
    let n = idx.len();
    let total_good = idx.iter().filter(|&&i| labels[i]).count();
    let parent = gini(total_good, n);
    let mut best: Option<Split> = None;

    // The index is the payload here: it names the feature a Split tests.
    #[allow(clippy::needless_range_loop)]
    for feature in 0..N_FEATURES {
        let mut order: Vec<usize> = idx.to_vec();
        order.sort_by(|&a, &b| {
            features[a][feature]
                .partial_cmp(&features[b][feature])
                .expect("features are finite")
                .then(a.cmp(&b))
        });
        let mut left_n = 0usize;
        let mut left_good = 0usize;
        for w in 0..n - 1 {
            left_n += 1;
            if labels[order[w]] {
                left_good += 1;
            }
            let a = features[order[w]][feature];
            let b = features[order[w + 1]][feature];
            if a == b {
                continue;
            }
            let threshold = a + (b - a) / 2.0;
            let right_n = n - left_n;
            let right_good = total_good - left_good;
            let weighted = (left_n as f64 * gini(left_good, left_n)
                + right_n as f64 * gini(right_good, right_n))
                / n as f64;
            if weighted < parent - 1e-12
                && best.as_ref().is_none_or(|s| weighted < s.impurity - 1e-12)
            {
                best = Some(Split {
                    feature,
                    threshold,
                    impurity: weighted,
                });
            }
        }
    }
    best
}

fn build(
    features: &[[f64; N_FEATURES]],
    labels: &[bool],
    idx: &[usize],
    depth_left: usize,
) -> TreeNode {
    let n_good = idx.iter().filter(|&&i| labels[i]).count();
    let leaf = TreeNode::Leaf {
        p_good: n_good as f64 / idx.len() as f64,
    };
    if depth_left == 0 || n_good == 0 || n_good == idx.len() {
        return leaf;
    }
    let Some(split) = best_split(features, labels, idx) else {
        return leaf;
    };
    let (left_idx, right_idx): (Vec<usize>, Vec<usize>) = idx
        .iter()
        .partition(|&&i| features[i][split.feature] <= split.threshold);
    TreeNode::Split {
        feature: split.feature,
        threshold: split.threshold,
        left: Box::new(build(features, labels, &left_idx, depth_left - 1)),
        right: Box::new(build(features, labels, &right_idx, depth_left - 1)),
    }
}

/// Fit a single tree on the given example indices.
pub fn fit_tree(
    features: &[[f64; N_FEATURES]],
    labels: &[bool],
    idx: &[usize],
    max_depth: usize,
) -> TreeNode {
    build(features, labels, idx, max_depth)
}

/// Fit `n_trees` trees, each on a bootstrap resample of all examples.
pub fn fit_bagged(
    features: &[[f64; N_FEATURES]],
    labels: &[bool],
    n_trees: usize,
    max_depth: usize,
    rng: &mut ChaCha8Rng,
) -> BaggedTrees {
    let n = features.len();
    let trees = (0..n_trees)
        .map(|_| {
            let sample: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            fit_tree(features, labels, &sample, max_depth)
        })
        .collect();
    BaggedTrees { trees }
}
