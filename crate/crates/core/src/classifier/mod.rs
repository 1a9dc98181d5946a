//! Good/bad-gait classifier: a fixed candidate sweep (bagged trees and
//! kNN) selected by stratified cross-validation on macro-F1, with an
//! optional soft-vote ensemble of the top candidates.

mod knn;
mod metrics;
mod tree;

pub use knn::KnnModel;
pub use metrics::{ClassMetrics, Metrics};
pub use tree::{fit_bagged, fit_tree, BaggedTrees, TreeNode, N_FEATURES};

use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::GaitFeatures;
use crate::rng::derive_rng;

/// Model file format version; bump on breaking schema changes.
pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Default decision threshold on the GoodGait score.
pub const DEFAULT_THRESHOLD: f64 = 0.5;

// RNG stream purposes, so independent stages never share a stream.
const P_SPLIT: u64 = 0x53504C49;
const P_FOLDS: u64 = 0x464F4C44;
const P_CV_FIT: u64 = 0x43564649;
const P_FINAL_FIT: u64 = 0x46494E46;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GaitLabel {
    #[serde(rename = "good")]
    GoodGait,
    #[serde(rename = "bad")]
    BadGait,
}

impl fmt::Display for GaitLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GaitLabel::GoodGait => "good",
            GaitLabel::BadGait => "bad",
        })
    }
}

impl FromStr for GaitLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "good" => Ok(GaitLabel::GoodGait),
            "bad" => Ok(GaitLabel::BadGait),
            other => Err(Error::Parse(format!(
                "unknown label '{other}', expected 'good' or 'bad'"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledExample {
    pub id: String,
    pub features: GaitFeatures,
    pub label: GaitLabel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub n_folds: usize,
    /// Soft-vote the top three candidates instead of keeping only the best.
    pub ensemble: bool,
    pub seed: u64,
    /// Wall-clock cap; the sweep is truncated in its fixed order once this
    /// is exceeded.
    pub time_budget_s: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            n_folds: 10,
            ensemble: true,
            seed: 0,
            time_budget_s: 300.0,
        }
    }
}

/// One hyperparameter setting in the sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CandidateSpec {
    BaggedTrees { n_trees: usize, max_depth: usize },
    Knn { k: usize },
}

impl fmt::Display for CandidateSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CandidateSpec::BaggedTrees { n_trees, max_depth } => {
                write!(f, "bagged-trees(n_trees={n_trees}, max_depth={max_depth})")
            }
            CandidateSpec::Knn { k } => write!(f, "knn(k={k})"),
        }
    }
}

/// The fixed sweep, in the order the budget truncates it: bagged trees
/// over {10, 50} trees x depth {2, 4, 8}, then kNN over k in {1, 3, 5, 9}.
pub fn candidate_sweep() -> Vec<CandidateSpec> {
    let mut out = Vec::new();
    for n_trees in [10, 50] {
        for max_depth in [2, 4, 8] {
            out.push(CandidateSpec::BaggedTrees { n_trees, max_depth });
        }
    }
    for k in [1, 3, 5, 9] {
        out.push(CandidateSpec::Knn { k });
    }
    out
}

/// Per-dimension z-score statistics fitted on training data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: [f64; N_FEATURES],
    pub std: [f64; N_FEATURES],
}

impl Standardizer {
    fn fit_indices(features: &[[f64; N_FEATURES]], idx: &[usize]) -> Standardizer {
        let n = idx.len() as f64;
        let mut mean = [0.0; N_FEATURES];
        for &i in idx {
            for d in 0..N_FEATURES {
                mean[d] += features[i][d];
            }
        }
        for m in &mut mean {
            *m /= n;
        }
        let mut std = [0.0; N_FEATURES];
        for &i in idx {
            for d in 0..N_FEATURES {
                let dev = features[i][d] - mean[d];
                std[d] += dev * dev;
            }
        }
        for s in &mut std {
            *s = (*s / n).sqrt();
            // Constant dimensions pass through unscaled.
            if *s < 1e-12 {
                *s = 1.0;
            }
        }
        Standardizer { mean, std }
    }

    pub fn fit(features: &[[f64; N_FEATURES]]) -> Standardizer {
        let idx: Vec<usize> = (0..features.len()).collect();
        Standardizer::fit_indices(features, &idx)
    }

    pub fn transform(&self, x: &[f64; N_FEATURES]) -> [f64; N_FEATURES] {
        let mut z = [0.0; N_FEATURES];
        for d in 0..N_FEATURES {
            z[d] = (x[d] - self.mean[d]) / self.std[d];
        }
        z
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ComponentModel {
    Trees(BaggedTrees),
    Knn(KnnModel),
}

impl ComponentModel {
    fn score(&self, z: &[f64; N_FEATURES]) -> f64 {
        match self {
            ComponentModel::Trees(bag) => bag.score(z),
            ComponentModel::Knn(knn) => knn.score(z),
        }
    }
}

/// One fitted member of the final model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedComponent {
    pub spec: CandidateSpec,
    pub cv_macro_f1: f64,
    pub weight: f64,
    pub model: ComponentModel,
}

/// Cross-validation outcome for one candidate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateReport {
    pub spec: CandidateSpec,
    pub fold_macro_f1: Vec<f64>,
    pub mean_macro_f1: f64,
}

/// Serialized, self-contained classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriageModel {
    pub format_version: u32,
    pub seed: u64,
    pub n_folds: usize,
    pub ensemble: bool,
    /// GoodGait iff score strictly exceeds this; exact ties go to BadGait.
    pub threshold: f64,
    /// True when the time budget cut the sweep short.
    pub sweep_truncated: bool,
    pub standardizer: Standardizer,
    pub components: Vec<FittedComponent>,
    pub cv_report: Vec<CandidateReport>,
}

impl TriageModel {
    pub fn set_threshold(&mut self, threshold: f64) -> Result<()> {
        if !threshold.is_finite() || !(0.0..=1.0).contains(&threshold) {
            return Err(Error::InvalidParams(format!(
                "threshold must be in [0, 1], got {threshold}"
            )));
        }
        self.threshold = threshold;
        Ok(())
    }
}

fn feature_matrix(examples: &[LabeledExample]) -> Result<Vec<[f64; N_FEATURES]>> {
    examples
        .iter()
        .map(|e| {
            let v = e.features.as_vector();
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "example '{}' has non-finite features",
                    e.id
                )));
            }
            Ok(v)
        })
        .collect()
}

fn class_counts(examples: &[LabeledExample]) -> (usize, usize) {
    let good = examples
        .iter()
        .filter(|e| e.label == GaitLabel::GoodGait)
        .count();
    (examples.len() - good, good)
}

/// Stratified train/test split: per-class test quotas come from largest-
/// remainder allocation of `round(n * test_fraction)` seats, remainder
/// ties going to the larger class. Outputs keep the input order.
pub fn split_train_test(
    examples: &[LabeledExample],
    test_fraction: f64,
    seed: u64,
) -> Result<(Vec<LabeledExample>, Vec<LabeledExample>)> {
    if !(test_fraction.is_finite() && 0.0 < test_fraction && test_fraction < 1.0) {
        return Err(Error::InvalidParams(format!(
            "test_fraction must be in (0, 1), got {test_fraction}"
        )));
    }
    if examples.len() < 5 {
        return Err(Error::InvalidInput(format!(
            "need at least 5 examples to split, got {}",
            examples.len()
        )));
    }
    let (n_bad, n_good) = class_counts(examples);
    if n_bad == 0 || n_good == 0 {
        return Err(Error::InvalidInput(
            "both classes must be present to stratify the split".into(),
        ));
    }

    let n = examples.len();
    let test_total = ((n as f64 * test_fraction).round() as usize).clamp(1, n - 1);
    let counts = [n_bad, n_good];
    let caps = [n_bad - 1, n_good - 1]; // keep at least one per class in train
    let mut quota = [0usize; 2];
    let mut remainders = [0i64; 2];
    for c in 0..2 {
        let ideal = counts[c] as f64 * test_fraction;
        quota[c] = (ideal.floor() as usize).min(caps[c]);
        // Quantize so float dust cannot decide remainder ties.
        remainders[c] = ((ideal - ideal.floor()) * 1e9).round() as i64;
    }
    let mut seats_left = test_total.saturating_sub(quota[0] + quota[1]);
    // Larger remainder first; ties go to the larger class, then to index 0.
    let mut order = [0usize, 1];
    order.sort_by(|&a, &b| {
        remainders[b]
            .cmp(&remainders[a])
            .then(counts[b].cmp(&counts[a]))
            .then(a.cmp(&b))
    });
    while seats_left > 0 {
        let mut gave = false;
        for &c in &order {
            if seats_left > 0 && quota[c] < caps[c] {
                quota[c] += 1;
                seats_left -= 1;
                gave = true;
            }
        }
        if !gave {
            break; // caps reached; accept a smaller test set
        }
    }

    let mut test_flags = vec![false; n];
    for (c, class) in [GaitLabel::BadGait, GaitLabel::GoodGait].iter().enumerate() {
        let mut idx: Vec<usize> = (0..n).filter(|&i| examples[i].label == *class).collect();
        let mut rng = derive_rng(seed, P_SPLIT, c as u64);
        idx.shuffle(&mut rng);
        for &i in idx.iter().take(quota[c]) {
            test_flags[i] = true;
        }
    }

    let mut train = Vec::with_capacity(n - test_total);
    let mut test = Vec::with_capacity(test_total);
    for (i, e) in examples.iter().enumerate() {
        if test_flags[i] {
            test.push(e.clone());
        } else {
            train.push(e.clone());
        }
    }
    Ok((train, test))
}

/// Stratified fold assignment: per-class shuffle, then round-robin deal.
/// Returns each fold's validation indices, sorted.
pub fn stratified_folds(
    labels: &[GaitLabel],
    n_folds: usize,
    seed: u64,
) -> Result<Vec<Vec<usize>>> {
    if n_folds < 2 {
        return Err(Error::InvalidParams(format!(
            "need at least 2 folds, got {n_folds}"
        )));
    }
    for class in [GaitLabel::BadGait, GaitLabel::GoodGait] {
        let count = labels.iter().filter(|&&l| l == class).count();
        if count < n_folds {
            return Err(Error::InvalidInput(format!(
                "class '{class}' has {count} examples; every one of the \
                 {n_folds} folds needs at least one"
            )));
        }
    }
    let mut folds = vec![Vec::new(); n_folds];
    // Each class deals round-robin starting where the previous class
    // stopped, so leftover items spread over different folds and fold
    // sizes stay within one of each other.
    let mut offset = 0;
    for (c, class) in [GaitLabel::BadGait, GaitLabel::GoodGait].iter().enumerate() {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == *class).collect();
        let mut rng = derive_rng(seed, P_FOLDS, c as u64);
        idx.shuffle(&mut rng);
        for (j, &i) in idx.iter().enumerate() {
            folds[(offset + j) % n_folds].push(i);
        }
        offset = (offset + idx.len()) % n_folds;
    }
    for fold in &mut folds {
        fold.sort_unstable();
    }
    Ok(folds)
}

fn fit_candidate(
    spec: &CandidateSpec,
    z: &[[f64; N_FEATURES]],
    labels: &[bool],
    rng: &mut ChaCha8Rng,
) -> ComponentModel {
    match *spec {
        CandidateSpec::BaggedTrees { n_trees, max_depth } => {
            ComponentModel::Trees(fit_bagged(z, labels, n_trees, max_depth, rng))
        }
        CandidateSpec::Knn { k } => {
            ComponentModel::Knn(KnnModel::fit(z.to_vec(), labels.to_vec(), k))
        }
    }
}

fn score_to_label(score: f64, threshold: f64) -> GaitLabel {
    if score > threshold {
        GaitLabel::GoodGait
    } else {
        GaitLabel::BadGait
    }
}

fn bool_to_label(good: bool) -> GaitLabel {
    if good {
        GaitLabel::GoodGait
    } else {
        GaitLabel::BadGait
    }
}

/// Macro-F1 of one candidate on one held-out fold.
fn cv_fold_score(
    spec: &CandidateSpec,
    features: &[[f64; N_FEATURES]],
    labels: &[bool],
    val: &[usize],
    rng: &mut ChaCha8Rng,
) -> f64 {
    let in_val = {
        let mut mask = vec![false; features.len()];
        for &i in val {
            mask[i] = true;
        }
        mask
    };
    let train_idx: Vec<usize> = (0..features.len()).filter(|&i| !in_val[i]).collect();
    let standardizer = Standardizer::fit_indices(features, &train_idx);
    let z: Vec<[f64; N_FEATURES]> = train_idx
        .iter()
        .map(|&i| standardizer.transform(&features[i]))
        .collect();
    let train_labels: Vec<bool> = train_idx.iter().map(|&i| labels[i]).collect();
    let model = fit_candidate(spec, &z, &train_labels, rng);

    let pairs: Vec<(GaitLabel, GaitLabel)> = val
        .iter()
        .map(|&i| {
            let score = model.score(&standardizer.transform(&features[i]));
            (
                bool_to_label(labels[i]),
                score_to_label(score, DEFAULT_THRESHOLD),
            )
        })
        .collect();
    Metrics::from_pairs(&pairs).macro_f1
}

/// Run the sweep under cross-validation, select, and refit on all data.
///
/// Candidates run serially in sweep order so the time budget truncates
/// deterministically; folds within a candidate run in parallel, each on
/// its own derived RNG stream, so parallel and serial runs agree.
pub fn train(examples: &[LabeledExample], cfg: &TrainConfig) -> Result<TriageModel> {
    if !cfg.time_budget_s.is_finite() || cfg.time_budget_s < 0.0 {
        return Err(Error::InvalidParams(format!(
            "time_budget_s must be finite and >= 0, got {}",
            cfg.time_budget_s
        )));
    }
    let features = feature_matrix(examples)?;
    let labels_enum: Vec<GaitLabel> = examples.iter().map(|e| e.label).collect();
    let labels: Vec<bool> = examples
        .iter()
        .map(|e| e.label == GaitLabel::GoodGait)
        .collect();
    let folds = stratified_folds(&labels_enum, cfg.n_folds, cfg.seed)?;

    let sweep = candidate_sweep();
    let start = Instant::now();
    let mut reports: Vec<CandidateReport> = Vec::new();
    let mut truncated = false;
    for (ci, spec) in sweep.iter().enumerate() {
        if start.elapsed().as_secs_f64() >= cfg.time_budget_s {
            if reports.is_empty() {
                return Err(Error::Budget(format!(
                    "time budget of {} s exhausted before any candidate finished",
                    cfg.time_budget_s
                )));
            }
            truncated = true;
            break;
        }
        let fold_macro_f1: Vec<f64> = folds
            .par_iter()
            .enumerate()
            .map(|(fi, val)| {
                let mut rng = derive_rng(cfg.seed, P_CV_FIT, ((ci as u64) << 32) | fi as u64);
                cv_fold_score(spec, &features, &labels, val, &mut rng)
            })
            .collect();
        let mean_macro_f1 = fold_macro_f1.iter().sum::<f64>() / fold_macro_f1.len() as f64;
        reports.push(CandidateReport {
            spec: *spec,
            fold_macro_f1,
            mean_macro_f1,
        });
    }

    // Rank candidates: higher CV score first, sweep order breaks ties.
    let mut ranking: Vec<usize> = (0..reports.len()).collect();
    ranking.sort_by(|&a, &b| {
        reports[b]
            .mean_macro_f1
            .partial_cmp(&reports[a].mean_macro_f1)
            .expect("macro-F1 is finite")
            .then(a.cmp(&b))
    });
    let keep = if cfg.ensemble {
        ranking.len().min(3)
    } else {
        1
    };
    let chosen = &ranking[..keep];

    let standardizer = Standardizer::fit(&features);
    let z: Vec<[f64; N_FEATURES]> = features.iter().map(|f| standardizer.transform(f)).collect();
    let mut weights: Vec<f64> = chosen.iter().map(|&ci| reports[ci].mean_macro_f1).collect();
    if weights.iter().sum::<f64>() <= 1e-12 {
        weights = vec![1.0; chosen.len()];
    }
    let components: Vec<FittedComponent> = chosen
        .iter()
        .zip(weights)
        .map(|(&ci, weight)| {
            let mut rng = derive_rng(cfg.seed, P_FINAL_FIT, ci as u64);
            FittedComponent {
                spec: sweep[ci],
                cv_macro_f1: reports[ci].mean_macro_f1,
                weight,
                model: fit_candidate(&sweep[ci], &z, &labels, &mut rng),
            }
        })
        .collect();

    Ok(TriageModel {
        format_version: MODEL_FORMAT_VERSION,
        seed: cfg.seed,
        n_folds: cfg.n_folds,
        ensemble: cfg.ensemble,
        threshold: DEFAULT_THRESHOLD,
        sweep_truncated: truncated,
        standardizer,
        components,
        cv_report: reports,
    })
}

/// Score and label one feature vector.
pub fn predict(model: &TriageModel, features: &GaitFeatures) -> Result<(GaitLabel, f64)> {
    let v = features.as_vector();
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "non-finite feature vector {v:?}"
        )));
    }
    if model.components.is_empty() {
        return Err(Error::InvalidInput("model has no fitted components".into()));
    }
    let z = model.standardizer.transform(&v);
    let weight_sum: f64 = model.components.iter().map(|c| c.weight).sum();
    let score: f64 = model
        .components
        .iter()
        .map(|c| c.weight * c.model.score(&z))
        .sum::<f64>()
        / weight_sum;
    Ok((score_to_label(score, model.threshold), score))
}

/// Confusion matrix and derived metrics over a labelled test set.
pub fn evaluate(model: &TriageModel, test: &[LabeledExample]) -> Result<Metrics> {
    if test.is_empty() {
        return Err(Error::EmptyInput("empty test set".into()));
    }
    let pairs: Result<Vec<(GaitLabel, GaitLabel)>> = test
        .iter()
        .map(|e| predict(model, &e.features).map(|(label, _)| (e.label, label)))
        .collect();
    Ok(Metrics::from_pairs(&pairs?))
}

/// Write the model as pretty-printed JSON.
pub fn save_model(model: &TriageModel, path: &Path) -> Result<()> {
    let mut body = serde_json::to_string_pretty(model)
        .map_err(|e| Error::Parse(format!("model serialization failed: {e}")))?;
    body.push('\n');
    crate::dataset::write_atomic(path, body.as_bytes())
}

/// Load and validate a model file.
pub fn load_model(path: &Path) -> Result<TriageModel> {
    let body = std::fs::read_to_string(path)?;
    let model: TriageModel = serde_json::from_str(&body)
        .map_err(|e| Error::Parse(format!("malformed model file: {e}")))?;
    if model.format_version != MODEL_FORMAT_VERSION {
        return Err(Error::Parse(format!(
            "model format version {} unsupported (expected {})",
            model.format_version, MODEL_FORMAT_VERSION
        )));
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn example(id: usize, prom: f64, res: f64, dist: f64, label: GaitLabel) -> LabeledExample {
        LabeledExample {
            id: format!("e{id:04}"),
            features: GaitFeatures {
                avg_peak_prominence: prom,
                rms_residual: res,
                avg_peak_distance: dist,
                n_peaks: 0,
            },
            label,
        }
    }

    /// Deterministic separable set: good near (10, 5, 30), bad near (1, 40, 150).
    fn separable(n_good: usize, n_bad: usize) -> Vec<LabeledExample> {
        let mut out = Vec::new();
        for i in 0..n_good {
            let jitter = (i % 7) as f64 * 0.05;
            out.push(example(
                i,
                10.0 + jitter,
                5.0 + jitter,
                30.0 - jitter,
                GaitLabel::GoodGait,
            ));
        }
        for i in 0..n_bad {
            let jitter = (i % 5) as f64 * 0.07;
            out.push(example(
                n_good + i,
                1.0 + jitter,
                40.0 + jitter,
                150.0 + jitter,
                GaitLabel::BadGait,
            ));
        }
        out
    }

    #[test]
    fn sweep_order_is_fixed() {
        let sweep = candidate_sweep();
        assert_eq!(sweep.len(), 10);
        assert_eq!(
            sweep[0],
            CandidateSpec::BaggedTrees {
                n_trees: 10,
                max_depth: 2
            }
        );
        assert_eq!(
            sweep[2],
            CandidateSpec::BaggedTrees {
                n_trees: 10,
                max_depth: 8
            }
        );
        assert_eq!(
            sweep[3],
            CandidateSpec::BaggedTrees {
                n_trees: 50,
                max_depth: 2
            }
        );
        assert_eq!(sweep[6], CandidateSpec::Knn { k: 1 });
        assert_eq!(sweep[9], CandidateSpec::Knn { k: 9 });
    }

    #[test]
    fn split_reproduces_reference_composition() {
        // 1399 examples, 422 good: expect test 280 (84 good / 196 bad).
        let mut examples = Vec::new();
        for i in 0..1399 {
            let label = if i % 3 == 0 && i < 1266 {
                GaitLabel::GoodGait
            } else {
                GaitLabel::BadGait
            };
            examples.push(example(i, i as f64, 0.0, 0.0, label));
        }
        let n_good = examples
            .iter()
            .filter(|e| e.label == GaitLabel::GoodGait)
            .count();
        assert_eq!(n_good, 422);

        let (train_set, test_set) = split_train_test(&examples, 0.2, 7).unwrap();
        assert_eq!(test_set.len(), 280);
        assert_eq!(train_set.len(), 1119);
        let test_good = test_set
            .iter()
            .filter(|e| e.label == GaitLabel::GoodGait)
            .count();
        assert_eq!(test_good, 84);
        let train_good = train_set
            .iter()
            .filter(|e| e.label == GaitLabel::GoodGait)
            .count();
        assert_eq!(train_good, 338);
    }

    #[test]
    fn split_small_balanced_set() {
        let examples = separable(5, 5);
        let (train_set, test_set) = split_train_test(&examples, 0.2, 1).unwrap();
        assert_eq!(train_set.len(), 8);
        assert_eq!(test_set.len(), 2);
        let good = test_set
            .iter()
            .filter(|e| e.label == GaitLabel::GoodGait)
            .count();
        assert_eq!(good, 1);
    }

    #[test]
    fn split_is_deterministic_and_partitions() {
        let examples = separable(30, 50);
        let (tr1, te1) = split_train_test(&examples, 0.25, 11).unwrap();
        let (tr2, te2) = split_train_test(&examples, 0.25, 11).unwrap();
        assert_eq!(tr1, tr2);
        assert_eq!(te1, te2);

        let mut ids: Vec<&str> = tr1.iter().chain(&te1).map(|e| e.id.as_str()).collect();
        ids.sort_unstable();
        let mut all: Vec<&str> = examples.iter().map(|e| e.id.as_str()).collect();
        all.sort_unstable();
        assert_eq!(ids, all);

        let (_, te3) = split_train_test(&examples, 0.25, 12).unwrap();
        assert_ne!(
            te1.iter().map(|e| &e.id).collect::<Vec<_>>(),
            te3.iter().map(|e| &e.id).collect::<Vec<_>>()
        );
    }

    #[test]
    fn split_rejects_degenerate_inputs() {
        let single: Vec<LabeledExample> = (0..10)
            .map(|i| example(i, 1.0, 1.0, 1.0, GaitLabel::BadGait))
            .collect();
        assert!(matches!(
            split_train_test(&single, 0.2, 0),
            Err(Error::InvalidInput(_))
        ));
        assert!(matches!(
            split_train_test(&separable(2, 1), 0.2, 0),
            Err(Error::InvalidInput(_))
        ));
        assert!(matches!(
            split_train_test(&separable(5, 5), 0.0, 0),
            Err(Error::InvalidParams(_))
        ));
        assert!(matches!(
            split_train_test(&separable(5, 5), 1.0, 0),
            Err(Error::InvalidParams(_))
        ));
    }

    #[test]
    fn folds_partition_and_stratify() {
        let labels: Vec<GaitLabel> = (0..50)
            .map(|i| {
                if i % 2 == 0 {
                    GaitLabel::GoodGait
                } else {
                    GaitLabel::BadGait
                }
            })
            .collect();
        let folds = stratified_folds(&labels, 10, 3).unwrap();
        assert_eq!(folds.len(), 10);
        let mut seen = [false; 50];
        for fold in &folds {
            assert_eq!(fold.len(), 5);
            let good = fold
                .iter()
                .filter(|&&i| labels[i] == GaitLabel::GoodGait)
                .count();
            assert!(good > 0 && good < fold.len(), "fold not stratified");
            for &i in fold {
                assert!(!seen[i], "index {i} in two folds");
                seen[i] = true;
            }
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn folds_reject_small_classes() {
        let labels: Vec<GaitLabel> = (0..30)
            .map(|i| {
                if i < 9 {
                    GaitLabel::GoodGait
                } else {
                    GaitLabel::BadGait
                }
            })
            .collect();
        assert!(matches!(
            stratified_folds(&labels, 10, 0),
            Err(Error::InvalidInput(_))
        ));
        assert!(matches!(
            stratified_folds(&labels, 1, 0),
            Err(Error::InvalidParams(_))
        ));
    }

    #[test]
    fn separable_data_trains_to_perfect_cv() {
        let examples = separable(30, 30);
        let cfg = TrainConfig {
            seed: 42,
            ..TrainConfig::default()
        };
        let model = train(&examples, &cfg).unwrap();
        assert!(!model.sweep_truncated);
        assert_eq!(model.cv_report.len(), 10);
        let best = model
            .cv_report
            .iter()
            .map(|r| r.mean_macro_f1)
            .fold(0.0, f64::max);
        assert_eq!(best, 1.0);
        assert_eq!(model.components.len(), 3);

        let m = evaluate(&model, &examples).unwrap();
        assert_eq!(m.macro_f1, 1.0);
        assert_eq!(m.confusion[0][1] + m.confusion[1][0], 0);
    }

    #[test]
    fn training_examples_memorized() {
        let examples = separable(20, 20);
        let model = train(
            &examples,
            &TrainConfig {
                seed: 5,
                ..Default::default()
            },
        )
        .unwrap();
        for e in &examples {
            let (label, score) = predict(&model, &e.features).unwrap();
            assert_eq!(label, e.label, "example {} mislabelled", e.id);
            match e.label {
                GaitLabel::GoodGait => assert!(score > 0.5),
                GaitLabel::BadGait => assert!(score <= 0.5),
            }
        }
    }

    #[test]
    fn zero_budget_is_an_error() {
        let examples = separable(20, 20);
        let cfg = TrainConfig {
            time_budget_s: 0.0,
            ..TrainConfig::default()
        };
        assert!(matches!(train(&examples, &cfg), Err(Error::Budget(_))));
    }

    #[test]
    fn training_is_byte_deterministic() {
        let examples = separable(25, 25);
        let cfg = TrainConfig {
            seed: 9,
            ..Default::default()
        };
        let a = serde_json::to_string(&train(&examples, &cfg).unwrap()).unwrap();
        let b = serde_json::to_string(&train(&examples, &cfg).unwrap()).unwrap();
        assert_eq!(a, b);

        let c = serde_json::to_string(
            &train(
                &examples,
                &TrainConfig {
                    seed: 10,
                    ..Default::default()
                },
            )
            .unwrap(),
        )
        .unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn ensemble_flag_controls_component_count() {
        let examples = separable(20, 20);
        let single = train(
            &examples,
            &TrainConfig {
                ensemble: false,
                seed: 3,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(single.components.len(), 1);
        let best_cv = single
            .cv_report
            .iter()
            .map(|r| r.mean_macro_f1)
            .fold(0.0, f64::max);
        assert_eq!(single.components[0].cv_macro_f1, best_cv);

        let voted = train(
            &examples,
            &TrainConfig {
                ensemble: true,
                seed: 3,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(voted.components.len(), 3);
    }

    #[test]
    fn exact_tie_scores_bad() {
        // Single kNN component with k=2 over one good and one bad point:
        // any query scores exactly 0.5, which must not pass the threshold.
        let model = TriageModel {
            format_version: MODEL_FORMAT_VERSION,
            seed: 0,
            n_folds: 2,
            ensemble: false,
            threshold: DEFAULT_THRESHOLD,
            sweep_truncated: false,
            standardizer: Standardizer {
                mean: [0.0; 3],
                std: [1.0; 3],
            },
            components: vec![FittedComponent {
                spec: CandidateSpec::Knn { k: 2 },
                cv_macro_f1: 1.0,
                weight: 1.0,
                model: ComponentModel::Knn(KnnModel::fit(
                    vec![[0.0; 3], [1.0; 3]],
                    vec![true, false],
                    2,
                )),
            }],
            cv_report: vec![],
        };
        let f = GaitFeatures {
            avg_peak_prominence: 0.5,
            rms_residual: 0.5,
            avg_peak_distance: 0.5,
            n_peaks: 1,
        };
        let (label, score) = predict(&model, &f).unwrap();
        assert_eq!(score, 0.5);
        assert_eq!(label, GaitLabel::BadGait);
    }

    #[test]
    fn predict_rejects_non_finite() {
        let model = train(&separable(20, 20), &TrainConfig::default()).unwrap();
        let f = GaitFeatures {
            avg_peak_prominence: f64::NAN,
            rms_residual: 1.0,
            avg_peak_distance: 1.0,
            n_peaks: 0,
        };
        assert!(matches!(predict(&model, &f), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn batch_order_does_not_change_scores() {
        let examples = separable(15, 15);
        let model = train(
            &examples,
            &TrainConfig {
                seed: 2,
                ..Default::default()
            },
        )
        .unwrap();
        let forward: Vec<f64> = examples
            .iter()
            .map(|e| predict(&model, &e.features).unwrap().1)
            .collect();
        let backward: Vec<f64> = examples
            .iter()
            .rev()
            .map(|e| predict(&model, &e.features).unwrap().1)
            .collect();
        let rev: Vec<f64> = backward.into_iter().rev().collect();
        assert_eq!(forward, rev);
    }

    #[test]
    fn save_load_round_trip_preserves_predictions() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        let model = train(
            &separable(20, 20),
            &TrainConfig {
                seed: 4,
                ..Default::default()
            },
        )
        .unwrap();
        save_model(&model, &path).unwrap();
        let loaded = load_model(&path).unwrap();
        assert_eq!(model, loaded);

        let mut rng = derive_rng(100, 0x7E57, 0);
        for _ in 0..100 {
            let f = GaitFeatures {
                avg_peak_prominence: rng.random::<f64>() * 20.0,
                rms_residual: rng.random::<f64>() * 100.0,
                avg_peak_distance: rng.random::<f64>() * 200.0,
                n_peaks: 0,
            };
            let (l1, s1) = predict(&model, &f).unwrap();
            let (l2, s2) = predict(&loaded, &f).unwrap();
            assert_eq!(l1, l2);
            assert_eq!(s1.to_bits(), s2.to_bits());
        }
    }

    #[test]
    fn corrupt_model_files_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        let model = train(&separable(15, 15), &TrainConfig::default()).unwrap();
        save_model(&model, &path).unwrap();

        let body = std::fs::read_to_string(&path).unwrap();
        let truncated = dir.path().join("truncated.json");
        std::fs::write(&truncated, &body[..body.len() / 2]).unwrap();
        assert!(matches!(load_model(&truncated), Err(Error::Parse(_))));

        let future = dir.path().join("future.json");
        std::fs::write(
            &future,
            body.replacen("\"format_version\": 1", "\"format_version\": 99", 1),
        )
        .unwrap();
        assert!(matches!(load_model(&future), Err(Error::Parse(_))));
    }

    #[test]
    fn model_file_carries_audit_metadata() {
        let model = train(
            &separable(15, 15),
            &TrainConfig {
                seed: 77,
                ..Default::default()
            },
        )
        .unwrap();
        let body = serde_json::to_string_pretty(&model).unwrap();
        assert!(body.contains("\"seed\": 77"));
        assert!(body.contains("cv_report"));
        assert!(body.contains("fold_macro_f1"));
        for report in &model.cv_report {
            assert_eq!(report.fold_macro_f1.len(), 10);
            for &s in &report.fold_macro_f1 {
                assert!((0.0..=1.0).contains(&s));
            }
        }
    }

    #[test]
    fn evaluate_requires_examples() {
        let model = train(&separable(15, 15), &TrainConfig::default()).unwrap();
        assert!(matches!(evaluate(&model, &[]), Err(Error::EmptyInput(_))));
    }

    #[test]
    fn threshold_override_validated() {
        let mut model = train(&separable(15, 15), &TrainConfig::default()).unwrap();
        assert!(model.set_threshold(0.7).is_ok());
        assert_eq!(model.threshold, 0.7);
        assert!(model.set_threshold(1.5).is_err());
        assert!(model.set_threshold(f64::NAN).is_err());
    }
}
