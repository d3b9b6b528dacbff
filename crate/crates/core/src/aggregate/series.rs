use std::collections::BTreeMap;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::corpus::Session;
use crate::emoclass::Emotion;
use crate::error::{Error, Result};

use super::FirmSessionRecord;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesPoint {
    pub date: NaiveDate,
    pub share: f64,
    /// Trailing statistics over the previous `window` points, excluding this one.
    pub rolling_mean: Option<f64>,
    pub rolling_sd: Option<f64>,
    pub z: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmotionSeries {
    pub ticker: String,
    pub emotion: Emotion,
    pub window: usize,
    pub points: Vec<SeriesPoint>,
}

/// Daily share of `emotion` for one ticker. With `session = None` both
/// sessions of a date are pooled, weighted by message count.
pub fn daily_shares(
    records: &[FirmSessionRecord],
    ticker: &str,
    emotion: Emotion,
    session: Option<Session>,
) -> Vec<(NaiveDate, f64)> {
    let mut by_date: BTreeMap<NaiveDate, (f64, usize)> = BTreeMap::new();
    for r in records {
        if r.key.ticker != ticker || session.is_some_and(|s| s != r.key.session) {
            continue;
        }
        let e = by_date.entry(r.key.trade_date).or_default();
        e.0 += r.share(emotion) * r.n() as f64;
        e.1 += r.n();
    }
    by_date.into_iter().map(|(d, (s, n))| (d, s / n as f64)).collect()
}

/// Trailing SDs at or below this are rounding noise on a constant share.
const MIN_SD: f64 = 1e-12;

/// Trailing-window z-scores. The first `window` points carry no statistics;
/// a zero trailing SD leaves the z-score missing.
pub fn emotion_time_series(
    ticker: &str,
    emotion: Emotion,
    shares: &[(NaiveDate, f64)],
    window: usize,
) -> Result<EmotionSeries> {
    if window < 2 {
        return Err(Error::Invalid(format!(
            "rolling window must be at least 2, got {window}"
        )));
    }
    if shares.windows(2).any(|w| w[0].0 >= w[1].0) {
        return Err(Error::Invalid(format!(
            "{ticker} series dates are not strictly increasing"
        )));
    }
    let points = shares
        .iter()
        .enumerate()
        .map(|(i, &(date, share))| {
            let (mut rolling_mean, mut rolling_sd, mut z) = (None, None, None);
            if i >= window {
                let past = &shares[i - window..i];
                let n = window as f64;
                let mean = past.iter().map(|p| p.1).sum::<f64>() / n;
                let sd = (past.iter().map(|p| (p.1 - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
                rolling_mean = Some(mean);
                rolling_sd = Some(sd);
                if sd > MIN_SD {
                    z = Some((share - mean) / sd);
                }
            }
            SeriesPoint {
                date,
                share,
                rolling_mean,
                rolling_sd,
                z,
            }
        })
        .collect();
    Ok(EmotionSeries {
        ticker: ticker.to_string(),
        emotion,
        window,
        points,
    })
}
