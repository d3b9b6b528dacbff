use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{argmax, collapse_classes, Emotion, EmotionDistribution, Polarity, N_EMOTIONS};

const LOG_CLAMP: f64 = 1e-12;

/// Square count matrix: rows are true classes, columns predicted classes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn new(k: usize) -> Self {
        ConfusionMatrix {
            counts: vec![vec![0; k]; k],
        }
    }

    pub fn k(&self) -> usize {
        self.counts.len()
    }

    pub fn add(&mut self, truth: usize, predicted: usize) {
        self.counts[truth][predicted] += 1;
    }

    pub fn merge(&mut self, other: &ConfusionMatrix) {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.k()).map(|i| self.counts[i][i]).sum()
    }

    pub fn accuracy(&self) -> f64 {
        self.trace() as f64 / self.total() as f64
    }

    /// Each nonempty row divided by its total; empty rows stay zero.
    pub fn row_normalized(&self) -> Vec<Vec<f64>> {
        self.counts
            .iter()
            .map(|row| {
                let t: u64 = row.iter().sum();
                row.iter()
                    .map(|&c| if t == 0 { 0.0 } else { c as f64 / t as f64 })
                    .collect()
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub loss: f64,
    pub accuracy: f64,
    pub confusion: ConfusionMatrix,
}

fn evaluate_generic<'a>(rows: impl Iterator<Item = (&'a [f64], usize)>, k: usize) -> Evaluation {
    let mut confusion = ConfusionMatrix::new(k);
    let mut loss = 0.0;
    let mut n = 0usize;
    for (p, truth) in rows {
        loss -= p[truth].max(LOG_CLAMP).ln();
        confusion.add(truth, argmax(p));
        n += 1;
    }
    Evaluation {
        loss: loss / n as f64,
        accuracy: confusion.accuracy(),
        confusion,
    }
}

fn check_aligned(preds: usize, labels: usize) -> Result<()> {
    if preds != labels {
        return Err(Error::LengthMismatch {
            left: preds,
            right: labels,
        });
    }
    if preds == 0 {
        return Err(Error::Invalid("cannot evaluate zero predictions".into()));
    }
    Ok(())
}

/// Mean cross-entropy, argmax accuracy and 7×7 confusion matrix.
pub fn evaluate(preds: &[EmotionDistribution], labels: &[Emotion]) -> Result<Evaluation> {
    check_aligned(preds.len(), labels.len())?;
    Ok(evaluate_generic(
        preds.iter().zip(labels).map(|(p, l)| (p.probs().as_slice(), l.index())),
        N_EMOTIONS,
    ))
}

/// The same metrics after collapsing to positive/neutral/negative.
pub fn evaluate_collapsed(preds: &[EmotionDistribution], labels: &[Emotion]) -> Result<Evaluation> {
    check_aligned(preds.len(), labels.len())?;
    let collapsed: Vec<[f64; 3]> = preds.iter().map(|p| collapse_classes(p).as_array()).collect();
    Ok(evaluate_generic(
        collapsed
            .iter()
            .zip(labels)
            .map(|(p, l)| (p.as_slice(), Polarity::of(*l).index())),
        3,
    ))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    /// Test-set indices per fold, each sorted ascending.
    pub folds: Vec<Vec<usize>>,
    pub warnings: Vec<String>,
}

/// Stratified k-fold assignment. Each class with at least `k` members is
/// shuffled and dealt round-robin; smaller classes are pooled, shuffled and
/// dealt after them, with a warning.
pub fn stratified_folds(labels: &[Emotion], k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::Invalid(format!("need at least 2 folds, got {k}")));
    }
    if labels.len() < k {
        return Err(Error::Invalid(format!(
            "{} examples cannot fill {k} folds",
            labels.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut by_class: BTreeMap<Emotion, Vec<usize>> = BTreeMap::new();
    for (i, l) in labels.iter().enumerate() {
        by_class.entry(*l).or_default().push(i);
    }
    let mut order = Vec::with_capacity(labels.len());
    let mut small = Vec::new();
    let mut warnings = Vec::new();
    for (class, mut members) in by_class {
        if members.len() < k {
            warnings.push(format!(
                "class {class} has {} examples, fewer than {k} folds; assigned unstratified",
                members.len()
            ));
            small.extend(members);
        } else {
            members.shuffle(&mut rng);
            order.extend(members);
        }
    }
    small.shuffle(&mut rng);
    order.extend(small);

    let mut folds = vec![Vec::new(); k];
    for (pos, i) in order.into_iter().enumerate() {
        folds[pos % k].push(i);
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(FoldPlan { folds, warnings })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanSd {
    pub mean: f64,
    /// Sample standard deviation (n − 1 denominator).
    pub sd: f64,
}

impl MeanSd {
    pub fn of(xs: &[f64]) -> MeanSd {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let sd = if xs.len() < 2 {
            0.0
        } else {
            (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        };
        MeanSd { mean, sd }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldMetrics {
    pub fold: usize,
    pub n_test: usize,
    pub loss: f64,
    pub accuracy: f64,
    pub loss3: f64,
    pub accuracy3: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub k: usize,
    pub seed: u64,
    pub folds: Vec<FoldMetrics>,
    pub loss: MeanSd,
    pub accuracy: MeanSd,
    pub loss3: MeanSd,
    pub accuracy3: MeanSd,
    /// Confusion matrix pooled over all test folds.
    pub confusion: ConfusionMatrix,
    pub warnings: Vec<String>,
}

/// Runs `fit_predict(train, test)` on each stratified fold. The callback
/// returns one prediction per test index, in order.
pub fn cross_validate<F>(labels: &[Emotion], k: usize, seed: u64, mut fit_predict: F) -> Result<CvReport>
where
    F: FnMut(&[usize], &[usize]) -> Result<Vec<EmotionDistribution>>,
{
    let plan = stratified_folds(labels, k, seed)?;
    for w in &plan.warnings {
        log::warn!("{w}");
    }
    let mut folds = Vec::with_capacity(k);
    let mut confusion = ConfusionMatrix::new(N_EMOTIONS);
    for (f, test) in plan.folds.iter().enumerate() {
        let train: Vec<usize> = plan
            .folds
            .iter()
            .enumerate()
            .filter(|(g, _)| *g != f)
            .flat_map(|(_, idx)| idx.iter().copied())
            .collect();
        let preds = fit_predict(&train, test)?;
        let truth: Vec<Emotion> = test.iter().map(|&i| labels[i]).collect();
        let e7 = evaluate(&preds, &truth)?;
        let e3 = evaluate_collapsed(&preds, &truth)?;
        confusion.merge(&e7.confusion);
        folds.push(FoldMetrics {
            fold: f,
            n_test: test.len(),
            loss: e7.loss,
            accuracy: e7.accuracy,
            loss3: e3.loss,
            accuracy3: e3.accuracy,
        });
    }
    let stat = |get: fn(&FoldMetrics) -> f64| MeanSd::of(&folds.iter().map(get).collect::<Vec<_>>());
    Ok(CvReport {
        k,
        seed,
        loss: stat(|m| m.loss),
        accuracy: stat(|m| m.accuracy),
        loss3: stat(|m| m.loss3),
        accuracy3: stat(|m| m.accuracy3),
        folds,
        confusion,
        warnings: plan.warnings,
    })
}
