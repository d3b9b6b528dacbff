use std::collections::HashSet;

use approx::assert_abs_diff_eq;
use emopipe::emoclass::{
    collapse_classes, evaluate, porter_stem, stratified_folds, train_softmax, Emotion, EmotionDistribution,
    FeatureMatrix, SoftmaxConfig, SoftmaxModel, TfidfConfig, TfidfModel,
};
use proptest::prelude::*;

const VECTORS: &str = include_str!("data/porter_vectors.tsv");

#[test]
fn porter_matches_reference_vectors() {
    let mut n = 0;
    for line in VECTORS.lines().filter(|l| !l.is_empty()) {
        let (word, stem) = line.split_once('\t').expect("word<TAB>stem");
        assert_eq!(porter_stem(word), stem, "{word}");
        n += 1;
    }
    assert!(n >= 1000);
}

fn distribution() -> impl Strategy<Value = EmotionDistribution> {
    prop::array::uniform7(0.0f64..10.0).prop_map(|w| EmotionDistribution::from_weights(w).unwrap())
}

fn emotion() -> impl Strategy<Value = Emotion> {
    (0usize..7).prop_map(|i| Emotion::ALL[i])
}

const WORDS: [&str; 12] = [
    "buy", "sell", "moon", "the", "crash", "trading", "is", "great", "awful", "hold", "not", "calls",
];

fn docs() -> impl Strategy<Value = Vec<Vec<String>>> {
    prop::collection::vec(
        prop::collection::vec(prop::sample::select(&WORDS[..]).prop_map(String::from), 0..8),
        2..12,
    )
}

proptest! {
    #[test]
    fn collapse_preserves_mass(d in distribution()) {
        let c = collapse_classes(&d);
        prop_assert!((c.positive + c.neutral + c.negative - 1.0).abs() < 1e-12);
    }

    #[test]
    fn confusion_trace_equals_accuracy(pairs in prop::collection::vec((distribution(), emotion()), 1..60)) {
        let (preds, labels): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
        let e = evaluate(&preds, &labels).unwrap();
        prop_assert!((e.confusion.trace() as f64 / e.confusion.total() as f64 - e.accuracy).abs() < 1e-15);
        for row in e.confusion.row_normalized() {
            let s: f64 = row.iter().sum();
            prop_assert!(s == 0.0 || (s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn uniform_loss_is_ln7(labels in prop::collection::vec(emotion(), 1..40)) {
        let preds = vec![EmotionDistribution::uniform(); labels.len()];
        prop_assert!((evaluate(&preds, &labels).unwrap().loss - 7f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn folds_partition(labels in prop::collection::vec(emotion(), 5..200), k in 2usize..6, seed: u64) {
        let plan = stratified_folds(&labels, k, seed).unwrap();
        let mut seen = HashSet::new();
        for f in &plan.folds {
            for &i in f {
                prop_assert!(seen.insert(i));
            }
        }
        prop_assert_eq!(seen.len(), labels.len());
        let sizes: Vec<usize> = plan.folds.iter().map(Vec::len).collect();
        prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
    }

    #[test]
    fn transform_reproduces_fit_rows(corpus in docs()) {
        let cfg = TfidfConfig { min_df: 1, ..TfidfConfig::default() };
        if let Ok((m, x)) = TfidfModel::fit_transform(&corpus, &cfg) {
            for (doc, row) in corpus.iter().zip(&x.rows) {
                prop_assert_eq!(&m.transform(doc), row);
            }
            prop_assert!(m.idf().iter().all(|v| v.is_finite() && *v >= 1.0));
        }
    }

    #[test]
    fn softmax_gradient_matches_finite_differences(
        dense in prop::collection::vec(prop::collection::vec(-2.0f64..2.0, 3), 2..6),
        w0 in prop::collection::vec(-1.0f64..1.0, 21),
        labels in prop::collection::vec(emotion(), 6),
        l2 in 0.0f64..0.5,
    ) {
        let x = FeatureMatrix::from_dense(&dense).unwrap();
        let labels = &labels[..x.n_rows()];
        let mut m = SoftmaxModel::zeros(3);
        m.weights.copy_from_slice(&w0);
        let (_, gw, _) = m.loss_and_gradient(&x, labels, l2);
        let h = 1e-5;
        for i in 0..gw.len() {
            let mut p = m.clone();
            p.weights[i] += h;
            let mut q = m.clone();
            q.weights[i] -= h;
            let fd = (p.loss_and_gradient(&x, labels, l2).0 - q.loss_and_gradient(&x, labels, l2).0) / (2.0 * h);
            let scale = fd.abs().max(gw[i].abs());
            prop_assert!((fd - gw[i]).abs() <= 1e-5 * scale.max(1e-3), "{} vs {}", fd, gw[i]);
        }
    }

    #[test]
    fn softmax_predictions_are_simplex(
        dense in prop::collection::vec(prop::collection::vec(-3.0f64..3.0, 2), 4..20),
        labels in prop::collection::vec(emotion(), 20),
    ) {
        let x = FeatureMatrix::from_dense(&dense).unwrap();
        let labels = &labels[..x.n_rows()];
        prop_assume!(labels.iter().any(|l| *l != labels[0]) && x.n_cols > 0);
        let m = train_softmax(&x, labels, &SoftmaxConfig { epochs: 50, ..Default::default() }).unwrap();
        prop_assert!(m.loss_history.windows(2).all(|w| w[1] <= w[0]));
        for row in &x.rows {
            let p = m.predict_row(row);
            prop_assert!(EmotionDistribution::new(*p.probs()).is_ok());
        }
    }
}

#[test]
fn seven_class_separable_reaches_full_training_accuracy() {
    // one indicator feature per class plus shared noise features
    let mut dense = Vec::new();
    let mut labels = Vec::new();
    for i in 0..700 {
        let k = i % 7;
        let mut row = vec![0.0; 10];
        row[k] = 1.0;
        row[7 + i % 3] = 0.5;
        dense.push(row);
        labels.push(Emotion::ALL[k]);
    }
    let x = FeatureMatrix::from_dense(&dense).unwrap();
    let m = train_softmax(
        &x,
        &labels,
        &SoftmaxConfig {
            l2: 0.0,
            ..Default::default()
        },
    )
    .unwrap();
    let preds: Vec<_> = x.rows.iter().map(|r| m.predict_row(r)).collect();
    assert_eq!(evaluate(&preds, &labels).unwrap().accuracy, 1.0);
    assert_abs_diff_eq!(m.final_loss, *m.loss_history.last().unwrap());
}
