use std::collections::HashMap;

use chrono::{DateTime, NaiveDate};
use emopipe::aggregate::{aggregate_firm_session, valence, AggregateConfig, FinanceDictionary, Weighting};
use emopipe::corpus::{RawMessage, SelfTag, Session, SessionKey};
use emopipe::emoclass::{EmotionDistribution, SIMPLEX_TOL};
use emopipe::textprep::CleanMessage;
use proptest::prelude::*;

fn message(id: usize, followers: u64) -> (RawMessage, CleanMessage) {
    let raw = RawMessage {
        message_id: format!("m{id:04}"),
        user_id: format!("u{id}"),
        timestamp: DateTime::parse_from_rfc3339("2021-03-01T10:00:00-05:00").unwrap(),
        body: "text".into(),
        cashtags: vec!["ABC".into()],
        self_tag: if id.is_multiple_of(3) {
            SelfTag::Bullish
        } else {
            SelfTag::None
        },
        follower_count: followers,
        likes: 0,
        user_experience: Default::default(),
        user_approach: Default::default(),
        user_horizon: Default::default(),
        sentiment_score: None,
    };
    let clean = CleanMessage {
        message_id: raw.message_id.clone(),
        tokens: vec!["text".into()],
        has_hyperlink: false,
        is_retweet: false,
        normalized_text: "text".into(),
    };
    (raw, clean)
}

fn key() -> SessionKey {
    SessionKey {
        ticker: "ABC".into(),
        trade_date: NaiveDate::from_ymd_opt(2021, 3, 1).unwrap(),
        session: Session::Market,
    }
}

fn dist() -> impl Strategy<Value = EmotionDistribution> {
    prop::array::uniform7(0.001f64..1.0).prop_map(|w| EmotionDistribution::from_weights(w).unwrap())
}

proptest! {
    #[test]
    fn valence_is_linear(a in dist(), b in dist(), t in 0.0f64..1.0) {
        let mix: Vec<f64> = a.probs().iter().zip(b.probs()).map(|(x, y)| t * x + (1.0 - t) * y).collect();
        let m = EmotionDistribution::new(mix.try_into().unwrap()).unwrap();
        prop_assert!((valence(&m) - (t * valence(&a) + (1.0 - t) * valence(&b))).abs() < 1e-12);
        prop_assert!((-1.0..=1.0).contains(&valence(&a)));
    }

    #[test]
    fn aggregates_stay_on_simplex(
        dists in prop::collection::vec(dist(), 1..40),
        followers in prop::collection::vec(0u64..1_000_000, 40),
    ) {
        let rows: Vec<_> = (0..dists.len()).map(|i| message(i, followers[i])).collect();
        let preds: HashMap<String, EmotionDistribution> =
            rows.iter().zip(&dists).map(|((m, _), d)| (m.message_id.clone(), *d)).collect();
        let rec = aggregate_firm_session(&key(), &rows, &preds, &AggregateConfig::default(), &FinanceDictionary::default()).unwrap();
        let total: f64 = rec.all.means.probs().iter().sum();
        prop_assert!((total - 1.0).abs() <= SIMPLEX_TOL);
        prop_assert!((rec.valence() - valence(&rec.all.means)).abs() < 1e-12);
        prop_assert_eq!(rec.n(), rows.len());
    }

    #[test]
    fn zero_followers_weigh_equally(dists in prop::collection::vec(dist(), 1..30)) {
        let rows: Vec<_> = (0..dists.len()).map(|i| message(i, 0)).collect();
        let preds: HashMap<String, EmotionDistribution> =
            rows.iter().zip(&dists).map(|((m, _), d)| (m.message_id.clone(), *d)).collect();
        let fin = FinanceDictionary::default();
        let follower = aggregate_firm_session(&key(), &rows, &preds, &AggregateConfig::default(), &fin).unwrap();
        let cfg = AggregateConfig { weighting: Weighting::Equal, ..Default::default() };
        let equal = aggregate_firm_session(&key(), &rows, &preds, &cfg, &fin).unwrap();
        for (x, y) in follower.all.means.probs().iter().zip(equal.all.means.probs()) {
            prop_assert!((x - y).abs() < 1e-12);
        }
        prop_assert!((follower.all.sentiment - equal.all.sentiment).abs() < 1e-12);
    }

    #[test]
    fn input_order_does_not_matter(dists in prop::collection::vec(dist(), 2..30), rot in 1usize..29) {
        let rows: Vec<_> = (0..dists.len()).map(|i| message(i, (i * 37) as u64)).collect();
        let preds: HashMap<String, EmotionDistribution> =
            rows.iter().zip(&dists).map(|((m, _), d)| (m.message_id.clone(), *d)).collect();
        let mut rotated = rows.clone();
        rotated.rotate_left(rot % rows.len());
        let fin = FinanceDictionary::default();
        let cfg = AggregateConfig::default();
        let a = aggregate_firm_session(&key(), &rows, &preds, &cfg, &fin).unwrap();
        let b = aggregate_firm_session(&key(), &rotated, &preds, &cfg, &fin).unwrap();
        prop_assert_eq!(a, b);
    }
}
