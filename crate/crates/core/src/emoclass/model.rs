use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::textprep::CleanMessage;

use super::cart::{train_cart, train_forest, CartConfig, ForestModel, TreeModel};
use super::softmax::{train_softmax, SoftmaxConfig, SoftmaxModel};
use super::tfidf::{SparseRow, TfidfConfig, TfidfModel};
use super::{Emotion, EmotionDistribution};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    #[default]
    Softmax,
    Cart,
    Forest,
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_lowercase().as_str() {
            "softmax" => Ok(ModelKind::Softmax),
            "cart" | "tree" => Ok(ModelKind::Cart),
            "forest" | "bagged_cart" => Ok(ModelKind::Forest),
            other => Err(Error::Invalid(format!("unknown model kind {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub kind: ModelKind,
    pub tfidf: TfidfConfig,
    pub softmax: SoftmaxConfig,
    pub cart: CartConfig,
    pub n_trees: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            kind: ModelKind::Softmax,
            tfidf: TfidfConfig::default(),
            softmax: SoftmaxConfig::default(),
            cart: CartConfig::default(),
            n_trees: 25,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Classifier {
    Softmax(SoftmaxModel),
    Cart(TreeModel),
    Forest(ForestModel),
}

impl Classifier {
    pub fn predict_row(&self, row: &SparseRow) -> EmotionDistribution {
        match self {
            Classifier::Softmax(m) => m.predict_row(row),
            Classifier::Cart(m) => m.predict_row(row),
            Classifier::Forest(m) => m.predict_row(row),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Classifier::Softmax(_) => "softmax",
            Classifier::Cart(_) => "cart",
            Classifier::Forest(_) => "forest",
        }
    }
}

/// A fitted featurizer together with its classifier.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EmotionModel {
    pub featurizer: TfidfModel,
    pub classifier: Classifier,
}

impl EmotionModel {
    pub fn predict_tokens(&self, tokens: &[String]) -> EmotionDistribution {
        self.classifier.predict_row(&self.featurizer.transform(tokens))
    }

    pub fn predict(&self, msg: &CleanMessage) -> EmotionDistribution {
        self.predict_tokens(&msg.tokens)
    }

    pub fn source(&self) -> &'static str {
        self.classifier.name()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        serde_json::to_writer(std::io::BufWriter::new(file), self)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_reader(std::io::BufReader::new(file))?)
    }
}

/// Fits the featurizer on `docs` and trains the configured classifier.
pub fn train_model(docs: &[Vec<String>], labels: &[Emotion], cfg: &TrainConfig) -> Result<EmotionModel> {
    if docs.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: docs.len(),
            right: labels.len(),
        });
    }
    let (featurizer, x) = TfidfModel::fit_transform(docs, &cfg.tfidf)?;
    let classifier = match cfg.kind {
        ModelKind::Softmax => Classifier::Softmax(train_softmax(&x, labels, &cfg.softmax)?),
        ModelKind::Cart => Classifier::Cart(train_cart(&x, labels, &cfg.cart)?),
        ModelKind::Forest => Classifier::Forest(train_forest(&x, labels, &cfg.cart, cfg.n_trees, cfg.seed)?),
    };
    Ok(EmotionModel { featurizer, classifier })
}
