//! Seven-way emotion classification: feature extraction, native classifiers,
//! evaluation, the prediction interchange file and the annotation prompt.

mod cart;
mod evaluate;
mod interchange;
mod model;
mod porter;
mod prompt;
mod softmax;
mod tfidf;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use cart::{train_cart, train_forest, CartConfig, ForestModel, Node, TreeModel};
pub use evaluate::{
    cross_validate, evaluate, evaluate_collapsed, stratified_folds, ConfusionMatrix, CvReport, Evaluation, FoldMetrics,
    FoldPlan, MeanSd,
};
pub use interchange::{
    load_predictions, read_predictions, write_predictions, write_predictions_file, PredictionRecord,
};
pub use model::{train_model, Classifier, EmotionModel, ModelKind, TrainConfig};
pub use porter::porter_stem;
pub use prompt::{build_annotation_prompt, AnnotationPrompt, PROMPT_MODEL, PROMPT_TEMPERATURE};
pub use softmax::{train_softmax, SoftmaxConfig, SoftmaxModel};
pub use tfidf::{builtin_stopwords, FeatureMatrix, SparseRow, TfidfConfig, TfidfModel};

/// Simplex tolerance for probability vectors.
pub const SIMPLEX_TOL: f64 = 1e-6;

pub const N_EMOTIONS: usize = 7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Emotion {
    Neutral,
    Happy,
    Sad,
    Anger,
    Disgust,
    Surprise,
    Fear,
}

impl Emotion {
    pub const ALL: [Emotion; N_EMOTIONS] = [
        Emotion::Neutral,
        Emotion::Happy,
        Emotion::Sad,
        Emotion::Anger,
        Emotion::Disgust,
        Emotion::Surprise,
        Emotion::Fear,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Emotion> {
        Self::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Emotion::Neutral => "neutral",
            Emotion::Happy => "happy",
            Emotion::Sad => "sad",
            Emotion::Anger => "anger",
            Emotion::Disgust => "disgust",
            Emotion::Surprise => "surprise",
            Emotion::Fear => "fear",
        }
    }
}

impl fmt::Display for Emotion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Emotion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().trim_end_matches('.').to_lowercase();
        Ok(match s.as_str() {
            "neutral" => Emotion::Neutral,
            "happy" | "happiness" | "joy" => Emotion::Happy,
            "sad" | "sadness" => Emotion::Sad,
            "anger" | "angry" => Emotion::Anger,
            "disgust" | "disgusted" => Emotion::Disgust,
            "surprise" | "surprised" => Emotion::Surprise,
            "fear" | "afraid" => Emotion::Fear,
            _ => return Err(Error::Invalid(format!("unknown emotion label {s:?}"))),
        })
    }
}

/// Probability vector over [`Emotion::ALL`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(transparent)]
pub struct EmotionDistribution([f64; N_EMOTIONS]);

impl EmotionDistribution {
    /// Validates the simplex invariant within [`SIMPLEX_TOL`].
    pub fn new(probs: [f64; N_EMOTIONS]) -> Result<Self> {
        check_simplex(&probs)?;
        Ok(EmotionDistribution(probs))
    }

    pub fn uniform() -> Self {
        EmotionDistribution([1.0 / N_EMOTIONS as f64; N_EMOTIONS])
    }

    pub fn one_hot(e: Emotion) -> Self {
        let mut p = [0.0; N_EMOTIONS];
        p[e.index()] = 1.0;
        EmotionDistribution(p)
    }

    /// Normalizes nonnegative weights; all-zero weights give the uniform distribution.
    pub fn from_weights(w: [f64; N_EMOTIONS]) -> Result<Self> {
        if w.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(Error::Invalid(format!("weights must be finite and nonnegative: {w:?}")));
        }
        let total: f64 = w.iter().sum();
        if total == 0.0 {
            return Ok(Self::uniform());
        }
        Ok(EmotionDistribution(w.map(|x| x / total)))
    }

    pub(crate) fn from_raw(p: [f64; N_EMOTIONS]) -> Self {
        debug_assert!(check_simplex(&p).is_ok(), "{p:?}");
        EmotionDistribution(p)
    }

    pub fn probs(&self) -> &[f64; N_EMOTIONS] {
        &self.0
    }

    pub fn get(&self, e: Emotion) -> f64 {
        self.0[e.index()]
    }

    /// Most probable emotion; ties go to the lowest index.
    pub fn argmax(&self) -> Emotion {
        Emotion::ALL[argmax(&self.0)]
    }

    pub fn collapse(&self) -> CollapsedDistribution {
        collapse_classes(self)
    }
}

impl<'de> Deserialize<'de> for EmotionDistribution {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let p = <[f64; N_EMOTIONS]>::deserialize(d)?;
        EmotionDistribution::new(p).map_err(serde::de::Error::custom)
    }
}

impl TryFrom<[f64; N_EMOTIONS]> for EmotionDistribution {
    type Error = Error;

    fn try_from(p: [f64; N_EMOTIONS]) -> Result<Self> {
        Self::new(p)
    }
}

fn check_simplex(p: &[f64]) -> Result<()> {
    if let Some(x) = p.iter().find(|x| !x.is_finite()) {
        return Err(Error::NonFinite(format!("probability {x}")));
    }
    if let Some(x) = p.iter().find(|x| **x < -SIMPLEX_TOL || **x > 1.0 + SIMPLEX_TOL) {
        return Err(Error::Invalid(format!("probability {x} outside [0, 1]")));
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > SIMPLEX_TOL {
        return Err(Error::Invalid(format!("probabilities sum to {sum}, not 1")));
    }
    Ok(())
}

/// Index of the largest value, first one on ties.
pub(crate) fn argmax(p: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in p.iter().enumerate() {
        if *v > p[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Positive,
    Neutral,
    Negative,
}

impl Polarity {
    pub const ALL: [Polarity; 3] = [Polarity::Positive, Polarity::Neutral, Polarity::Negative];

    pub fn of(e: Emotion) -> Polarity {
        match e {
            Emotion::Happy => Polarity::Positive,
            Emotion::Neutral | Emotion::Surprise => Polarity::Neutral,
            Emotion::Sad | Emotion::Anger | Emotion::Disgust | Emotion::Fear => Polarity::Negative,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

/// Three-way distribution ordered positive, neutral, negative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollapsedDistribution {
    pub positive: f64,
    pub neutral: f64,
    pub negative: f64,
}

impl CollapsedDistribution {
    pub fn as_array(&self) -> [f64; 3] {
        [self.positive, self.neutral, self.negative]
    }
}

pub fn collapse_classes(d: &EmotionDistribution) -> CollapsedDistribution {
    let mut out = [0.0; 3];
    for e in Emotion::ALL {
        out[Polarity::of(e).index()] += d.get(e);
    }
    CollapsedDistribution {
        positive: out[0],
        neutral: out[1],
        negative: out[2],
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Annotator {
    #[default]
    Human,
    Llm,
}

impl FromStr for Annotator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_lowercase().as_str() {
            "" | "human" => Ok(Annotator::Human),
            "llm" | "gpt" => Ok(Annotator::Llm),
            other => Err(Error::Invalid(format!("unknown annotator {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledExample {
    pub text: String,
    pub label: Emotion,
    pub annotator: Annotator,
}

#[derive(Deserialize)]
struct LabeledRecord {
    text: String,
    label: String,
    #[serde(default)]
    annotator: Option<String>,
}

/// Reads a `text,label,annotator` CSV; the annotator column is optional.
pub fn load_labeled(path: &Path) -> Result<Vec<LabeledExample>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_labeled(file, path)
}

pub fn read_labeled<R: std::io::Read>(reader: R, origin: &Path) -> Result<Vec<LabeledExample>> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let mut out = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let row: LabeledRecord = record
            .deserialize(Some(&headers))
            .map_err(|e| Error::parse(origin, line, e.to_string()))?;
        let label = row
            .label
            .parse()
            .map_err(|e: Error| Error::parse(origin, line, e.to_string()))?;
        let annotator = row
            .annotator
            .as_deref()
            .unwrap_or("")
            .parse()
            .map_err(|e: Error| Error::parse(origin, line, e.to_string()))?;
        out.push(LabeledExample {
            text: row.text,
            label,
            annotator,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn enum_order_and_names() {
        let names: Vec<_> = Emotion::ALL.iter().map(|e| e.name()).collect();
        assert_eq!(
            names,
            ["neutral", "happy", "sad", "anger", "disgust", "surprise", "fear"]
        );
        for (i, e) in Emotion::ALL.iter().enumerate() {
            assert_eq!(e.index(), i);
            assert_eq!(e.name().parse::<Emotion>().unwrap(), *e);
        }
        assert_eq!("Happiness.".parse::<Emotion>().unwrap(), Emotion::Happy);
        assert!("bored".parse::<Emotion>().is_err());
    }

    #[test]
    fn simplex_validation() {
        assert!(EmotionDistribution::new([0.064, 0.305, 0.431, 0.048, 0.03, 0.038, 0.084]).is_ok());
        assert!(EmotionDistribution::new([0.8, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]).is_err());
        assert!(EmotionDistribution::new([1.2, -0.2, 0.0, 0.0, 0.0, 0.0, 0.0]).is_err());
        assert!(EmotionDistribution::new([f64::NAN, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0]).is_err());
        assert!(EmotionDistribution::new([1.0 + 5e-7, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]).is_ok());
    }

    #[test]
    fn argmax_ties_to_lowest_index() {
        assert_eq!(EmotionDistribution::uniform().argmax(), Emotion::Neutral);
        let d = EmotionDistribution::new([0.1, 0.3, 0.3, 0.1, 0.1, 0.05, 0.05]).unwrap();
        assert_eq!(d.argmax(), Emotion::Happy);
    }

    #[test]
    fn collapse_examples() {
        let d = EmotionDistribution::new([0.5, 0.2, 0.1, 0.05, 0.05, 0.05, 0.05]).unwrap();
        let c = collapse_classes(&d);
        assert_abs_diff_eq!(c.positive, 0.2, epsilon = 1e-12);
        assert_abs_diff_eq!(c.neutral, 0.55, epsilon = 1e-12);
        assert_abs_diff_eq!(c.negative, 0.25, epsilon = 1e-12);

        let c = collapse_classes(&EmotionDistribution::one_hot(Emotion::Happy));
        assert_eq!(c.as_array(), [1.0, 0.0, 0.0]);

        let c = collapse_classes(&EmotionDistribution::uniform()).as_array();
        for (got, want) in c.iter().zip([1.0 / 7.0, 2.0 / 7.0, 4.0 / 7.0]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-12);
        }
    }

    #[test]
    fn from_weights_normalizes() {
        let d = EmotionDistribution::from_weights([2.0, 2.0, 0.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(d.probs()[..2], [0.5, 0.5]);
        assert_eq!(
            EmotionDistribution::from_weights([0.0; 7]).unwrap(),
            EmotionDistribution::uniform()
        );
        assert!(EmotionDistribution::from_weights([-1.0, 2.0, 0.0, 0.0, 0.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn labeled_csv() {
        let csv = "text,label,annotator\n\"buy now, moon\",happy,human\nugh,sad,llm\nmeh,neutral,\n";
        let rows = read_labeled(csv.as_bytes(), Path::new("t.csv")).unwrap();
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[0].text, "buy now, moon");
        assert_eq!(rows[1].annotator, Annotator::Llm);
        assert_eq!(rows[2].label, Emotion::Neutral);

        let bad = "text,label\nok,happy\nhmm,bored\n";
        match read_labeled(bad.as_bytes(), Path::new("t.csv")) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn distribution_serde_round_trip() {
        let d = EmotionDistribution::new([0.064, 0.305, 0.431, 0.048, 0.03, 0.038, 0.084]).unwrap();
        let s = serde_json::to_string(&d).unwrap();
        assert_eq!(serde_json::from_str::<EmotionDistribution>(&s).unwrap(), d);
        assert!(serde_json::from_str::<EmotionDistribution>("[0.8,0,0,0,0,0,0]").is_err());
    }
}
