use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::LabeledExample;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForestConfig {
    pub trees: usize,
    pub max_depth: usize,
    /// Draw each tree's training set with replacement; otherwise every tree
    /// sees the full set.
    pub bootstrap: bool,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Leaf(bool),
    Split {
        feature: usize,
        threshold: f64,
        /// Taken when `x[feature] <= threshold`.
        left: Box<Node>,
        right: Box<Node>,
    },
}

impl Node {
    pub fn predict(&self, x: &[f64; 2]) -> bool {
        match self {
            Node::Leaf(v) => *v,
            Node::Split {
                feature,
                threshold,
                left,
                right,
            } => {
                if x[*feature] <= *threshold {
                    left.predict(x)
                } else {
                    right.predict(x)
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Node::Leaf(_) => 0,
            Node::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForestModel {
    pub trees: Vec<Node>,
    pub config: ForestConfig,
}

impl ForestModel {
    /// Majority vote; a tied vote is positive.
    pub fn predict(&self, x: &[f64; 2]) -> bool {
        let yes = self.trees.iter().filter(|t| t.predict(x)).count();
        2 * yes >= self.trees.len()
    }

    pub fn positive_share(&self, x: &[f64; 2]) -> f64 {
        self.trees.iter().filter(|t| t.predict(x)).count() as f64 / self.trees.len() as f64
    }
}

fn gini(pos: usize, total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let p = pos as f64 / total as f64;
    2.0 * p * (1.0 - p)
}

/// Majority label; a tie is positive.
fn majority(sample: &[&LabeledExample]) -> bool {
    let pos = sample.iter().filter(|e| e.positive).count();
    2 * pos >= sample.len()
}

/// Best Gini split over both features at midpoints between distinct values.
/// Ties go to the lower feature, then the lower threshold.
fn best_split(sample: &[&LabeledExample]) -> Option<(usize, f64)> {
    let total = sample.len();
    let total_pos = sample.iter().filter(|e| e.positive).count();
    let parent = gini(total_pos, total);
    let mut best: Option<(f64, usize, f64)> = None;
    let mut sorted: Vec<&LabeledExample> = sample.to_vec();
    for feature in 0..2 {
        sorted.sort_by(|a, b| a.features[feature].total_cmp(&b.features[feature]));
        let mut left_pos = 0;
        for i in 1..total {
            left_pos += usize::from(sorted[i - 1].positive);
            let (lo, hi) = (sorted[i - 1].features[feature], sorted[i].features[feature]);
            if lo == hi {
                continue;
            }
            let impurity = (i as f64 * gini(left_pos, i)
                + (total - i) as f64 * gini(total_pos - left_pos, total - i))
                / total as f64;
            if best.is_none_or(|(b, _, _)| impurity < b) {
                best = Some((impurity, feature, lo + (hi - lo) / 2.0));
            }
        }
    }
    best.filter(|&(impurity, _, _)| impurity < parent)
        .map(|(_, feature, threshold)| (feature, threshold))
}

fn grow(sample: &[&LabeledExample], depth: usize) -> Node {
    let pos = sample.iter().filter(|e| e.positive).count();
    if depth == 0 || pos == 0 || pos == sample.len() {
        return Node::Leaf(majority(sample));
    }
    let Some((feature, threshold)) = best_split(sample) else {
        return Node::Leaf(majority(sample));
    };
    let (left, right): (Vec<&LabeledExample>, Vec<&LabeledExample>) =
        sample.iter().partition(|e| e.features[feature] <= threshold);
    Node::Split {
        feature,
        threshold,
        left: Box::new(grow(&left, depth - 1)),
        right: Box::new(grow(&right, depth - 1)),
    }
}

pub(super) fn fit(examples: &[LabeledExample], config: &ForestConfig) -> ForestModel {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let n = examples.len();
    let trees = (0..config.trees)
        .map(|_| {
            let sample: Vec<&LabeledExample> = if config.bootstrap {
                (0..n).map(|_| &examples[rng.random_range(0..n)]).collect()
            } else {
                examples.iter().collect()
            };
            grow(&sample, config.max_depth)
        })
        .collect();
    ForestModel {
        trees,
        config: *config,
    }
}
