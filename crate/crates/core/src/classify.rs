//! Linear scoring models.
//!
//! Two uses share one trainer: single-feature models `f(x) = w·x + b` whose
//! threshold behavior is interpretable on its own, and an all-feature
//! logistic regression over every implemented registry slot. Training is
//! full-batch gradient descent on the logistic loss — deterministic, no
//! stochastic minibatching — with features z-scored against training-pool
//! statistics. The score convention is fixed at training time: higher score
//! means spoof (spoof is class 1).

use serde::{Deserialize, Serialize};

use crate::config::TrainerConfig;
use crate::corpus::Label;
use crate::error::{Error, Result};

/// Scores with their ground-truth labels, the input to EER computation.
///
/// Construction enforces the invariants evaluation relies on: all scores
/// finite and at least one item per class.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreSet {
    items: Vec<(f64, Label)>,
}

impl ScoreSet {
    pub fn new(items: Vec<(f64, Label)>) -> Result<Self> {
        if let Some((s, _)) = items.iter().find(|(s, _)| !s.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite score {s} in score set")));
        }
        let bona = items.iter().filter(|(_, l)| *l == Label::Bonafide).count();
        let spoof = items.len() - bona;
        if bona == 0 || spoof == 0 {
            return Err(Error::SingleClass(format!(
                "score set needs both classes (got {bona} bonafide, {spoof} spoof)"
            )));
        }
        Ok(ScoreSet { items })
    }

    pub fn items(&self) -> &[(f64, Label)] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        false // both classes are always present
    }

    pub fn class_scores(&self, label: Label) -> Vec<f64> {
        self.items
            .iter()
            .filter(|(_, l)| *l == label)
            .map(|(s, _)| *s)
            .collect()
    }

    /// Negate every score (flips which direction "looks spoofed").
    pub fn negated(&self) -> ScoreSet {
        ScoreSet {
            items: self.items.iter().map(|&(s, l)| (-s, l)).collect(),
        }
    }
}

/// Scores that are just the raw per-utterance values of one feature slot —
/// no training involved. This is how single features are ranked and how
/// embedding columns are assessed.
pub fn raw_feature_scores(values: &[f64], labels: &[Label]) -> Result<ScoreSet> {
    if values.len() != labels.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} values vs {} labels",
            values.len(),
            labels.len()
        )));
    }
    ScoreSet::new(values.iter().copied().zip(labels.iter().copied()).collect())
}

/// A trained affine scoring model over standardized features.
///
/// `feature_indices` names the inputs each weight applies to (registry slots
/// for acoustic features, column numbers for embeddings); `score` expects its
/// input row in exactly that order. Standardization statistics come from the
/// training pool only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub feature_indices: Vec<usize>,
    pub weights: Vec<f64>,
    pub bias: f64,
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
    pub registry_version: String,
    /// Attack the training spoof pool came from, when the protocol knows it.
    pub trained_on: Option<String>,
}

impl LinearModel {
    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    /// Score one feature row (ordered per `feature_indices`):
    /// `w · standardize(x) + b`. Higher means more spoof-like.
    pub fn score(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "model has {} features, row has {}",
                self.dim(),
                x.len()
            )));
        }
        if let Some(v) = x.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite feature value {v}")));
        }
        let mut z = self.bias;
        for i in 0..x.len() {
            z += self.weights[i] * (x[i] - self.means[i]) / self.stds[i];
        }
        Ok(z)
    }
}

/// A finished training run: the model plus everything worth inspecting
/// about how it got there.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: LinearModel,
    /// Loss before each update plus the final loss (`epochs + 1` entries).
    pub losses: Vec<f64>,
    /// Input column positions that were constant in training and dropped.
    pub dropped: Vec<usize>,
    pub warnings: Vec<String>,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// ln(1 + e^t) without overflow for large |t|.
fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

/// Train a logistic-loss linear model with full-batch gradient descent.
///
/// `rows` are feature rows, one per example, ordered like `feature_indices`.
/// Spoof is the positive class. Features are z-scored against the statistics
/// of `rows` itself (the caller passes the training pool); constant features
/// cannot be standardized and are dropped with a warning. The loss —
/// mean cross-entropy plus `l2/2 · |w|²` (bias unregularized) — must be
/// non-increasing across epochs under sane configs; a rise or a non-finite
/// value aborts with a `Training` error rather than returning a bad model.
pub fn train_model(
    rows: &[Vec<f64>],
    labels: &[Label],
    feature_indices: &[usize],
    registry_version: &str,
    cfg: &TrainerConfig,
) -> Result<TrainOutcome> {
    if rows.len() != labels.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} rows vs {} labels",
            rows.len(),
            labels.len()
        )));
    }
    let n_spoof = labels.iter().filter(|l| **l == Label::Spoof).count();
    let n_bona = labels.len() - n_spoof;
    if n_bona == 0 || n_spoof == 0 {
        return Err(Error::SingleClass(format!(
            "training needs both classes (got {n_bona} bonafide, {n_spoof} spoof)"
        )));
    }
    if n_bona < 2 || n_spoof < 2 {
        return Err(Error::InvalidInput(format!(
            "training needs at least 2 examples per class (got {n_bona} bonafide, {n_spoof} spoof)"
        )));
    }
    let width = feature_indices.len();
    for (i, row) in rows.iter().enumerate() {
        if row.len() != width {
            return Err(Error::DimensionMismatch(format!(
                "row {i} has {} features, expected {width}",
                row.len()
            )));
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite feature value in row {i}")));
        }
    }

    let n = rows.len() as f64;

    // Column statistics over the training pool; constant columns are dropped.
    let mut kept: Vec<usize> = Vec::new();
    let mut dropped: Vec<usize> = Vec::new();
    let mut warnings: Vec<String> = Vec::new();
    let mut means: Vec<f64> = Vec::new();
    let mut stds: Vec<f64> = Vec::new();
    for c in 0..width {
        let mean = rows.iter().map(|r| r[c]).sum::<f64>() / n;
        let var = rows.iter().map(|r| (r[c] - mean) * (r[c] - mean)).sum::<f64>() / n;
        let std = var.sqrt();
        if std > 0.0 {
            kept.push(c);
            means.push(mean);
            stds.push(std);
        } else {
            dropped.push(c);
            warnings.push(format!(
                "feature {} is constant in the training pool; dropped",
                feature_indices[c]
            ));
        }
    }
    if kept.is_empty() {
        return Err(Error::Training(
            "every feature is constant in the training pool".into(),
        ));
    }

    // Standardized design matrix.
    let z: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| {
            kept.iter()
                .enumerate()
                .map(|(j, &c)| (r[c] - means[j]) / stds[j])
                .collect()
        })
        .collect();
    let y: Vec<f64> = labels
        .iter()
        .map(|l| if *l == Label::Spoof { 1.0 } else { 0.0 })
        .collect();

    let d = kept.len();
    let mut w = vec![0.0f64; d];
    let mut b = 0.0f64;
    let mut losses: Vec<f64> = Vec::with_capacity(cfg.epochs + 1);

    let loss_of = |w: &[f64], logits: &[f64]| -> f64 {
        let data: f64 = logits
            .iter()
            .zip(&y)
            .map(|(&zi, &yi)| softplus(zi) - yi * zi)
            .sum::<f64>()
            / n;
        data + cfg.l2 / 2.0 * w.iter().map(|wi| wi * wi).sum::<f64>()
    };

    let mut logits = vec![0.0f64; z.len()];
    for epoch in 0..=cfg.epochs {
        for (i, zi) in z.iter().enumerate() {
            logits[i] = zi.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() + b;
        }
        let loss = loss_of(&w, &logits);
        if !loss.is_finite() {
            return Err(Error::Training(format!("loss became non-finite at epoch {epoch}")));
        }
        if let Some(&prev) = losses.last() {
            if loss > prev + 1e-12 * prev.abs().max(1.0) {
                return Err(Error::Training(format!(
                    "loss increased at epoch {epoch} ({prev} -> {loss}); lower the learning rate"
                )));
            }
        }
        losses.push(loss);
        if epoch == cfg.epochs {
            break;
        }

        let mut grad_w = vec![0.0f64; d];
        let mut grad_b = 0.0f64;
        for (i, zi) in z.iter().enumerate() {
            let r = sigmoid(logits[i]) - y[i];
            grad_b += r;
            for (g, &f) in grad_w.iter_mut().zip(zi) {
                *g += r * f;
            }
        }
        for (g, &wi) in grad_w.iter_mut().zip(&w) {
            *g = *g / n + cfg.l2 * wi;
        }
        grad_b /= n;

        for (wi, g) in w.iter_mut().zip(&grad_w) {
            *wi -= cfg.learning_rate * g;
        }
        b -= cfg.learning_rate * grad_b;
    }

    Ok(TrainOutcome {
        model: LinearModel {
            feature_indices: kept.iter().map(|&c| feature_indices[c]).collect(),
            weights: w,
            bias: b,
            means,
            stds,
            registry_version: registry_version.to_string(),
            trained_on: None,
        },
        losses,
        dropped,
        warnings,
    })
}
