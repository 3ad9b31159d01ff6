//! Near-duplicate classification from the two pair distances.
//!
//! Features are `(instruction distance, ingredients distance)`; the positive
//! class is [`PairLabel::NearDuplicate`]. Training sets are balanced by
//! undersampling and hyperparameters are chosen by leave-one-out grid search
//! on pooled predictions.

mod forest;
mod logreg;

use std::fmt::{self, Write as _};

use log::{debug, warn};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use forest::{ForestConfig, ForestModel, Node};
pub use logreg::{logreg_objective, LogisticModel};

use crate::corpus::PairLabel;
use crate::exec;
use crate::pipeline::CandidatePair;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabeledExample {
    pub features: [f64; 2],
    pub positive: bool,
}

impl LabeledExample {
    pub fn new(instruction_distance: f64, ingredients_distance: f64, positive: bool) -> Self {
        LabeledExample {
            features: [instruction_distance, ingredients_distance],
            positive,
        }
    }

    /// `None` for unlabeled pairs.
    pub fn from_pair(pair: &CandidatePair) -> Option<Self> {
        pair.label.is_annotated().then(|| {
            LabeledExample::new(
                pair.instruction_distance,
                pair.ingredients_distance as f64,
                pair.label == PairLabel::NearDuplicate,
            )
        })
    }
}

fn check_finite(examples: &[LabeledExample]) -> Result<()> {
    match examples.iter().position(|e| !e.features.iter().all(|x| x.is_finite())) {
        Some(index) => Err(Error::NonFinite { index }),
        None => Ok(()),
    }
}

/// Keeps every example of the minority class and an equal-sized uniform
/// sample of the majority class, preserving input order.
pub fn undersample(examples: &[LabeledExample], seed: u64) -> Result<Vec<LabeledExample>> {
    let positives: Vec<usize> = (0..examples.len()).filter(|&i| examples[i].positive).collect();
    let negatives: Vec<usize> = (0..examples.len()).filter(|&i| !examples[i].positive).collect();
    if positives.is_empty() || negatives.is_empty() {
        return Err(Error::Invalid("undersampling needs both positive and negative examples".into()));
    }
    let (minority, majority) = if positives.len() <= negatives.len() {
        (positives, negatives)
    } else {
        warn!(
            "{} positives outnumber {} negatives; downsampling positives",
            positives.len(),
            negatives.len()
        );
        (negatives, positives)
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut keep: Vec<usize> = rand::seq::index::sample(&mut rng, majority.len(), minority.len())
        .into_iter()
        .map(|i| majority[i])
        .chain(minority)
        .collect();
    keep.sort_unstable();
    Ok(keep.into_iter().map(|i| examples[i]).collect())
}

/// Per-feature z-score statistics; a constant feature maps to 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scaler {
    pub mean: [f64; 2],
    pub std: [f64; 2],
}

impl Scaler {
    pub fn fit(examples: &[LabeledExample]) -> Self {
        let n = examples.len() as f64;
        let mut mean = [0.0; 2];
        let mut std = [0.0; 2];
        for f in 0..2 {
            mean[f] = examples.iter().map(|e| e.features[f]).sum::<f64>() / n;
            std[f] = (examples.iter().map(|e| (e.features[f] - mean[f]).powi(2)).sum::<f64>() / n).sqrt();
        }
        Scaler { mean, std }
    }

    pub fn transform(&self, x: &[f64; 2]) -> [f64; 2] {
        let z = |f: usize| {
            if self.std[f] > 0.0 {
                (x[f] - self.mean[f]) / self.std[f]
            } else {
                0.0
            }
        };
        [z(0), z(1)]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    LogisticRegression,
    RandomForest,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::LogisticRegression => "Logistic Regression",
            ModelKind::RandomForest => "Random Forest",
        })
    }
}

/// One grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Hyperparameters {
    LogisticRegression { lambda: f64 },
    RandomForest { trees: usize, max_depth: usize },
}

impl Hyperparameters {
    pub fn kind(&self) -> ModelKind {
        match self {
            Hyperparameters::LogisticRegression { .. } => ModelKind::LogisticRegression,
            Hyperparameters::RandomForest { .. } => ModelKind::RandomForest,
        }
    }
}

impl fmt::Display for Hyperparameters {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Hyperparameters::LogisticRegression { lambda } => write!(f, "lambda={lambda}"),
            Hyperparameters::RandomForest { trees, max_depth } => write!(f, "trees={trees} depth={max_depth}"),
        }
    }
}

pub fn default_grid(kind: ModelKind) -> Vec<Hyperparameters> {
    match kind {
        ModelKind::LogisticRegression => [0.01, 0.1, 1.0, 10.0, 100.0]
            .into_iter()
            .map(|lambda| Hyperparameters::LogisticRegression { lambda })
            .collect(),
        ModelKind::RandomForest => [10, 50, 100]
            .into_iter()
            .flat_map(|trees| {
                [2, 4, 8]
                    .into_iter()
                    .map(move |max_depth| Hyperparameters::RandomForest { trees, max_depth })
            })
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ClassifierModel {
    LogisticRegression(LogisticModel),
    RandomForest(ForestModel),
    /// Fitted on a single-class set.
    Constant(bool),
}

impl ClassifierModel {
    pub fn predict(&self, features: &[f64; 2]) -> bool {
        match self {
            ClassifierModel::LogisticRegression(m) => m.probability(features) >= 0.5,
            ClassifierModel::RandomForest(m) => m.predict(features),
            ClassifierModel::Constant(v) => *v,
        }
    }

    /// Positive-class probability (vote share for forests).
    pub fn score(&self, features: &[f64; 2]) -> f64 {
        match self {
            ClassifierModel::LogisticRegression(m) => m.probability(features),
            ClassifierModel::RandomForest(m) => m.positive_share(features),
            ClassifierModel::Constant(v) => f64::from(u8::from(*v)),
        }
    }
}

pub fn train_logreg(examples: &[LabeledExample], lambda: f64) -> Result<ClassifierModel> {
    check_finite(examples)?;
    if examples.is_empty() || !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::Invalid("logistic regression needs examples and a finite lambda >= 0".into()));
    }
    Ok(ClassifierModel::LogisticRegression(logreg::fit(examples, lambda)))
}

pub fn train_random_forest(examples: &[LabeledExample], trees: usize, max_depth: usize, seed: u64) -> Result<ClassifierModel> {
    train_forest(
        examples,
        &ForestConfig {
            trees,
            max_depth,
            bootstrap: true,
            seed,
        },
    )
}

pub fn train_forest(examples: &[LabeledExample], config: &ForestConfig) -> Result<ClassifierModel> {
    check_finite(examples)?;
    if examples.is_empty() || config.trees == 0 {
        return Err(Error::Invalid("random forest needs examples and at least one tree".into()));
    }
    Ok(ClassifierModel::RandomForest(forest::fit(examples, config)))
}

/// Fits the model a grid point describes. Single-class sets give a constant
/// model.
pub fn train(examples: &[LabeledExample], hyper: &Hyperparameters, seed: u64) -> Result<ClassifierModel> {
    let pos = examples.iter().filter(|e| e.positive).count();
    if !examples.is_empty() && (pos == 0 || pos == examples.len()) {
        check_finite(examples)?;
        return Ok(ClassifierModel::Constant(pos > 0));
    }
    match *hyper {
        Hyperparameters::LogisticRegression { lambda } => train_logreg(examples, lambda),
        Hyperparameters::RandomForest { trees, max_depth } => train_random_forest(examples, trees, max_depth, seed),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Harmonic mean of precision and recall; 0 when both are 0.
pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// Precision, recall and F1 on the positive class.
pub fn metrics(predictions: &[bool], labels: &[bool]) -> Metrics {
    assert_eq!(predictions.len(), labels.len(), "predictions and labels differ in length");
    let (mut tp, mut fp, mut fneg) = (0usize, 0usize, 0usize);
    for (&p, &l) in predictions.iter().zip(labels) {
        match (p, l) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fneg += 1,
            (false, false) => {}
        }
    }
    let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fneg);
    Metrics {
        precision,
        recall,
        f1: f1_score(precision, recall),
    }
}

/// Held-out prediction for every example, each from a model fitted on all
/// the others.
pub fn loo_predictions(examples: &[LabeledExample], hyper: &Hyperparameters, seed: u64) -> Result<Vec<bool>> {
    exec::map_range(examples.len(), |i| {
        let fold: Vec<LabeledExample> = examples
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, e)| *e)
            .collect();
        let model = train(&fold, hyper, seed)?;
        if let ClassifierModel::Constant(v) = model {
            debug!("fold {i} has a single class; predicting {v}");
        }
        Ok(model.predict(&examples[i].features))
    })
    .into_iter()
    .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub best: Hyperparameters,
    pub metrics: Metrics,
    /// Every grid point in declared order.
    pub evaluated: Vec<(Hyperparameters, Metrics)>,
}

/// Leave-one-out grid search maximizing pooled F1. Ties keep the earlier grid
/// point.
pub fn loocv_grid_search(examples: &[LabeledExample], grid: &[Hyperparameters], seed: u64) -> Result<GridResult> {
    if examples.len() < 2 {
        return Err(Error::Invalid("leave-one-out needs at least two examples".into()));
    }
    if grid.is_empty() {
        return Err(Error::Invalid("hyperparameter grid is empty".into()));
    }
    check_finite(examples)?;
    let labels: Vec<bool> = examples.iter().map(|e| e.positive).collect();
    let mut evaluated = Vec::with_capacity(grid.len());
    for hyper in grid {
        let predictions = loo_predictions(examples, hyper, seed)?;
        evaluated.push((*hyper, metrics(&predictions, &labels)));
    }
    let (best, best_metrics) = evaluated
        .iter()
        .fold(None::<&(Hyperparameters, Metrics)>, |acc, cur| match acc {
            Some(a) if a.1.f1 >= cur.1.f1 => Some(a),
            _ => Some(cur),
        })
        .copied()
        .expect("grid is non-empty");
    Ok(GridResult {
        best,
        metrics: best_metrics,
        evaluated,
    })
}

/// One classifier row of the results table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub method: String,
    pub classifier: ModelKind,
    pub result: GridResult,
}

/// F1, recall and precision per method and classifier, as text.
pub fn metrics_table(rows: &[ResultRow]) -> String {
    let mut out = String::new();
    let method_width = rows.iter().map(|r| r.method.len()).max().unwrap_or(0).max("Method".len());
    writeln!(
        out,
        "{:<method_width$}  {:<19}  {:>4}  {:>6}  {:>9}  Best",
        "Method", "Classifier", "F1", "Recall", "Precision"
    )
    .expect("String write");
    for r in rows {
        let m = r.result.metrics;
        writeln!(
            out,
            "{:<method_width$}  {:<19}  {:>4.2}  {:>6.2}  {:>9.2}  {}",
            r.method,
            r.classifier.to_string(),
            m.f1,
            m.recall,
            m.precision,
            r.result.best
        )
        .expect("String write");
    }
    out
}

#[cfg(test)]
mod tests;
