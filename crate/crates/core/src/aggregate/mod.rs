//! Message-level predictions rolled up into firm-session emotion records.

mod content;
mod io;
mod series;

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::corpus::{RawMessage, SessionGroups, SessionKey};
use crate::emoclass::{Emotion, EmotionDistribution, N_EMOTIONS};
use crate::error::{Error, Result};
use crate::textprep::CleanMessage;

pub use content::{tag_content, ChatType, ContentGroup, ContentTags, FinanceDictionary, InfoType};
pub use io::{read_firm_sessions, write_event_study, write_firm_sessions, FIRM_SESSION_BASE_COLUMNS};
pub use series::{daily_shares, emotion_time_series, EmotionSeries, SeriesPoint};

/// Happy minus the four negative emotions; neutral and surprise do not enter.
pub fn valence(d: &EmotionDistribution) -> f64 {
    valence_of(d.probs())
}

/// Valence of a raw component vector, such as rounded sample means that need
/// not sum to exactly one.
pub fn valence_of(p: &[f64; N_EMOTIONS]) -> f64 {
    p[Emotion::Happy.index()]
        - p[Emotion::Sad.index()]
        - p[Emotion::Anger.index()]
        - p[Emotion::Disgust.index()]
        - p[Emotion::Fear.index()]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum LogBase {
    #[default]
    Natural,
    Ten,
}

/// `1 + ln(1 + count)`.
pub fn follower_weight(count: i64) -> Result<f64> {
    follower_weight_base(count, LogBase::Natural)
}

pub fn follower_weight_base(count: i64, base: LogBase) -> Result<f64> {
    if count < 0 {
        return Err(Error::Invalid(format!("negative follower count {count}")));
    }
    let x = 1.0 + count as f64;
    Ok(1.0
        + match base {
            LogBase::Natural => x.ln(),
            LogBase::Ten => x.log10(),
        })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Weighting {
    #[default]
    Follower,
    Equal,
}

/// Which per-message number feeds the sentiment mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SentimentSource {
    #[default]
    SelfTag,
    /// Platform score, falling back to the self-tag when a message has none.
    Platform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct AggregateConfig {
    pub weighting: Weighting,
    pub log_base: LogBase,
    pub sentiment: SentimentSource,
    pub content_splits: bool,
}

impl AggregateConfig {
    fn weight(&self, m: &RawMessage) -> Result<f64> {
        match self.weighting {
            Weighting::Equal => Ok(1.0),
            Weighting::Follower => {
                let count = i64::try_from(m.follower_count)
                    .map_err(|_| Error::Invalid(format!("follower count {} too large", m.follower_count)))?;
                follower_weight_base(count, self.log_base)
            }
        }
    }

    fn sentiment(&self, m: &RawMessage) -> f64 {
        match (self.sentiment, m.sentiment_score) {
            (SentimentSource::Platform, Some(s)) => s,
            _ => m.self_tag.score(),
        }
    }
}

/// Weighted means over a set of messages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupMeans {
    pub n: usize,
    pub means: EmotionDistribution,
    pub valence: f64,
    pub sentiment: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FirmSessionRecord {
    pub key: SessionKey,
    pub all: GroupMeans,
    /// Present only for groups with at least one message, when splits are enabled.
    pub splits: BTreeMap<ContentGroup, GroupMeans>,
}

impl FirmSessionRecord {
    pub fn n(&self) -> usize {
        self.all.n
    }

    pub fn valence(&self) -> f64 {
        self.all.valence
    }

    pub fn share(&self, e: Emotion) -> f64 {
        self.all.means.get(e)
    }
}

struct Item<'a> {
    weight: f64,
    probs: &'a EmotionDistribution,
    sentiment: f64,
}

fn weighted_means<'a>(items: impl Iterator<Item = &'a Item<'a>>) -> Option<GroupMeans> {
    let mut acc = [0.0; N_EMOTIONS];
    let mut sent = 0.0;
    let mut total = 0.0;
    let mut n = 0;
    for it in items {
        for (a, p) in acc.iter_mut().zip(it.probs.probs()) {
            *a += it.weight * p;
        }
        sent += it.weight * it.sentiment;
        total += it.weight;
        n += 1;
    }
    if n == 0 {
        return None;
    }
    let means = acc.map(|a| a / total);
    Some(GroupMeans {
        n,
        valence: valence_of(&means),
        means: EmotionDistribution::from_raw(means),
        sentiment: sent / total,
    })
}

fn missing_ids(rows: &[(RawMessage, CleanMessage)], preds: &HashMap<String, EmotionDistribution>) -> Vec<String> {
    rows.iter()
        .filter(|(m, _)| !preds.contains_key(&m.message_id))
        .map(|(m, _)| m.message_id.clone())
        .collect()
}

/// Aggregates one session cell. Sums run in `message_id` order whatever the
/// input order, so results are bitwise reproducible.
pub fn aggregate_firm_session(
    key: &SessionKey,
    rows: &[(RawMessage, CleanMessage)],
    preds: &HashMap<String, EmotionDistribution>,
    cfg: &AggregateConfig,
    finance: &FinanceDictionary,
) -> Result<FirmSessionRecord> {
    if rows.is_empty() {
        return Err(Error::Invalid(format!("no messages for {key:?}")));
    }
    if let Some((m, _)) = rows
        .iter()
        .find(|(m, _)| m.single_ticker() != Some(key.ticker.as_str()))
    {
        return Err(Error::Invalid(format!(
            "message {} does not belong to ticker {}",
            m.message_id, key.ticker
        )));
    }
    let mut missing = missing_ids(rows, preds);
    if !missing.is_empty() {
        missing.sort();
        return Err(Error::MissingPredictions(missing));
    }

    let mut order: Vec<&(RawMessage, CleanMessage)> = rows.iter().collect();
    order.sort_by(|a, b| a.0.message_id.cmp(&b.0.message_id));
    let mut items = Vec::with_capacity(order.len());
    let mut tags = Vec::with_capacity(order.len());
    for (m, c) in order {
        items.push(Item {
            weight: cfg.weight(m)?,
            probs: &preds[&m.message_id],
            sentiment: cfg.sentiment(m),
        });
        tags.push(tag_content(c, finance));
    }

    let all = weighted_means(items.iter()).expect("nonempty");
    let mut splits = BTreeMap::new();
    if cfg.content_splits {
        for g in ContentGroup::ALL {
            let sub = items.iter().zip(&tags).filter(|(_, t)| g.contains(t)).map(|(i, _)| i);
            if let Some(means) = weighted_means(sub) {
                splits.insert(g, means);
            }
        }
    }
    Ok(FirmSessionRecord {
        key: key.clone(),
        all,
        splits,
    })
}

/// Aggregates every cell, reporting all messages lacking a prediction at once.
pub fn aggregate_all(
    groups: &SessionGroups<CleanMessage>,
    preds: &HashMap<String, EmotionDistribution>,
    cfg: &AggregateConfig,
    finance: &FinanceDictionary,
) -> Result<Vec<FirmSessionRecord>> {
    let mut missing: Vec<String> = groups.values().flat_map(|rows| missing_ids(rows, preds)).collect();
    if !missing.is_empty() {
        missing.sort();
        return Err(Error::MissingPredictions(missing));
    }
    groups
        .iter()
        .map(|(k, rows)| aggregate_firm_session(k, rows, preds, cfg, finance))
        .collect()
}
