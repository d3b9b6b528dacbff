use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use crate::corpus::SessionKey;
use crate::emoclass::{Emotion, EmotionDistribution, N_EMOTIONS};
use crate::error::{Error, Result};

use super::{ContentGroup, EmotionSeries, FirmSessionRecord, GroupMeans};

pub const FIRM_SESSION_BASE_COLUMNS: [&str; 13] = [
    "ticker",
    "date",
    "session",
    "n",
    "neutral",
    "happy",
    "sad",
    "anger",
    "disgust",
    "surprise",
    "fear",
    "valence",
    "sentiment",
];

fn group_columns(g: ContentGroup) -> Vec<String> {
    let mut cols = vec![format!("{g}_n")];
    cols.extend(Emotion::ALL.iter().map(|e| format!("{g}_{e}")));
    cols.push(format!("{g}_valence"));
    cols.push(format!("{g}_sentiment"));
    cols
}

fn group_values(m: Option<&GroupMeans>) -> Vec<String> {
    match m {
        None => vec![String::new(); N_EMOTIONS + 3],
        Some(m) => {
            let mut v = vec![m.n.to_string()];
            v.extend(m.means.probs().iter().map(f64::to_string));
            v.push(m.valence.to_string());
            v.push(m.sentiment.to_string());
            v
        }
    }
}

/// Writes the firm-session CSV. Split columns are included when any record
/// carries splits.
pub fn write_firm_sessions<W: Write>(writer: W, records: &[FirmSessionRecord]) -> Result<()> {
    let with_splits = records.iter().any(|r| !r.splits.is_empty());
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<String> = FIRM_SESSION_BASE_COLUMNS.iter().map(|s| s.to_string()).collect();
    if with_splits {
        for g in ContentGroup::ALL {
            header.extend(group_columns(g));
        }
    }
    w.write_record(&header)?;
    for r in records {
        let mut row = vec![
            r.key.ticker.clone(),
            r.key.trade_date.to_string(),
            r.key.session.to_string(),
        ];
        row.extend(group_values(Some(&r.all)));
        if with_splits {
            for g in ContentGroup::ALL {
                row.extend(group_values(r.splits.get(&g)));
            }
        }
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io("<firm sessions>", e))?;
    Ok(())
}

fn parse_group(row: &csv::StringRecord, idx: &[usize], origin: &Path, line: usize) -> Result<Option<GroupMeans>> {
    let field = |i: usize| row.get(idx[i]).unwrap_or("").trim();
    if field(0).is_empty() {
        return Ok(None);
    }
    let num = |i: usize| -> Result<f64> {
        field(i)
            .parse::<f64>()
            .map_err(|e| Error::parse(origin, line, format!("bad number {:?}: {e}", field(i))))
    };
    let n = field(0)
        .parse::<usize>()
        .map_err(|e| Error::parse(origin, line, format!("bad count: {e}")))?;
    let mut p = [0.0; N_EMOTIONS];
    for (k, v) in p.iter_mut().enumerate() {
        *v = num(1 + k)?;
    }
    let means = EmotionDistribution::new(p).map_err(|e| Error::parse(origin, line, e.to_string()))?;
    Ok(Some(GroupMeans {
        n,
        means,
        valence: num(N_EMOTIONS + 1)?,
        sentiment: num(N_EMOTIONS + 2)?,
    }))
}

pub fn read_firm_sessions(path: &Path) -> Result<Vec<FirmSessionRecord>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_firm_sessions_from(file, path)
}

pub fn read_firm_sessions_from<R: Read>(reader: R, origin: &Path) -> Result<Vec<FirmSessionRecord>> {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let find = |name: &str| headers.iter().position(|h| h == name);
    let base: Vec<usize> = FIRM_SESSION_BASE_COLUMNS
        .iter()
        .map(|c| find(c).ok_or_else(|| Error::UnknownColumn(c.to_string())))
        .collect::<Result<_>>()?;
    let groups: Vec<(ContentGroup, Vec<usize>)> = ContentGroup::ALL
        .iter()
        .filter_map(|g| {
            let idx: Option<Vec<usize>> = group_columns(*g).iter().map(|c| find(c)).collect();
            idx.map(|i| (*g, i))
        })
        .collect();

    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line() as usize);
        let bad = |msg: String| Error::parse(origin, line, msg);
        let key = SessionKey {
            ticker: row[base[0]].to_string(),
            trade_date: row[base[1]].parse().map_err(|e| bad(format!("bad date: {e}")))?,
            session: row[base[2]].parse().map_err(|e: Error| bad(e.to_string()))?,
        };
        let all = parse_group(&row, &base[3..], origin, line)?.ok_or_else(|| bad("empty message count".into()))?;
        let mut splits = BTreeMap::new();
        for (g, idx) in &groups {
            if let Some(m) = parse_group(&row, idx, origin, line)? {
                splits.insert(*g, m);
            }
        }
        out.push(FirmSessionRecord { key, all, splits });
    }
    Ok(out)
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

/// `ticker,emotion,date,share,rolling_mean,rolling_sd,z`; missing statistics are empty.
pub fn write_event_study<W: Write>(writer: W, series: &[EmotionSeries]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["ticker", "emotion", "date", "share", "rolling_mean", "rolling_sd", "z"])?;
    for s in series {
        for p in &s.points {
            w.write_record([
                s.ticker.clone(),
                s.emotion.to_string(),
                p.date.to_string(),
                p.share.to_string(),
                opt(p.rolling_mean),
                opt(p.rolling_sd),
                opt(p.z),
            ])?;
        }
    }
    w.flush().map_err(|e| Error::io("<event study>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aggregate::emotion_time_series;
    use crate::corpus::Session;
    use chrono::NaiveDate;

    fn record(ticker: &str, day: u32, splits: bool) -> FirmSessionRecord {
        let means = EmotionDistribution::new([0.1, 0.3, 0.1, 0.1, 0.1, 0.2, 0.1]).unwrap();
        let g = GroupMeans {
            n: 12,
            means,
            valence: -0.1,
            sentiment: 1.0 / 3.0,
        };
        let mut s = BTreeMap::new();
        if splits {
            s.insert(ContentGroup::Chat, GroupMeans { n: 7, ..g.clone() });
            s.insert(ContentGroup::Original, GroupMeans { n: 12, ..g.clone() });
        }
        FirmSessionRecord {
            key: SessionKey {
                ticker: ticker.into(),
                trade_date: NaiveDate::from_ymd_opt(2021, 6, day).unwrap(),
                session: Session::Premarket,
            },
            all: g,
            splits: s,
        }
    }

    #[test]
    fn round_trip_with_and_without_splits() {
        for splits in [false, true] {
            let recs = vec![record("AMC", 1, splits), record("GME", 2, splits)];
            let mut buf = Vec::new();
            write_firm_sessions(&mut buf, &recs).unwrap();
            let text = String::from_utf8(buf.clone()).unwrap();
            assert!(text
                .starts_with("ticker,date,session,n,neutral,happy,sad,anger,disgust,surprise,fear,valence,sentiment"));
            assert_eq!(text.contains("finance_n"), splits);
            let back = read_firm_sessions_from(buf.as_slice(), Path::new("f.csv")).unwrap();
            assert_eq!(back, recs);
        }
    }

    #[test]
    fn missing_column_reported() {
        let csv = "ticker,date,session,n\nAMC,2021-06-01,premarket,10\n";
        assert!(matches!(
            read_firm_sessions_from(csv.as_bytes(), Path::new("f.csv")),
            Err(Error::UnknownColumn(_))
        ));
    }

    #[test]
    fn event_study_columns() {
        let d = NaiveDate::from_ymd_opt(2021, 6, 1).unwrap();
        let shares = vec![
            (d, 0.04),
            (d + chrono::Days::new(1), 0.05),
            (d + chrono::Days::new(2), 0.09),
        ];
        let s = emotion_time_series("AMC", Emotion::Fear, &shares, 2).unwrap();
        let mut buf = Vec::new();
        write_event_study(&mut buf, &[s]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "ticker,emotion,date,share,rolling_mean,rolling_sd,z");
        assert_eq!(lines[1], "AMC,fear,2021-06-01,0.04,,,");
        assert!(lines[3].starts_with("AMC,fear,2021-06-03,0.09,0.045"));
    }
}
