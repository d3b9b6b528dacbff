//! Message ingestion, sample restrictions and session assignment.
//!
//! Messages are read from JSONL or CSV, restricted in a fixed order
//! (single ticker, not automated, eligible security, minimum activity) and
//! bucketed into `(ticker, trade date, session)` cells. Session windows are
//! wall-clock US Eastern: minutes in `[09:30, 16:00]` of a trading day belong
//! to that day's market session; everything after 16:00, before 09:30, or on
//! a non-trading day belongs to the premarket session of the next trading day.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;
use std::str::FromStr;

use chrono::{DateTime, FixedOffset, NaiveDate, NaiveDateTime, Timelike};
use chrono_tz::America::New_York;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelfTag {
    Bullish,
    Bearish,
    #[default]
    None,
}

impl SelfTag {
    /// +1 bullish, -1 bearish, 0 unclassified.
    pub fn score(self) -> f64 {
        match self {
            SelfTag::Bullish => 1.0,
            SelfTag::Bearish => -1.0,
            SelfTag::None => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UserExperience {
    Novice,
    Intermediate,
    Professional,
    #[default]
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UserApproach {
    Fundamental,
    Technical,
    #[default]
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UserHorizon {
    ShortTerm,
    LongTerm,
    #[default]
    Unknown,
}

macro_rules! parse_enum {
    ($ty:ty, $($text:literal => $variant:expr),+ $(,)?) => {
        impl FromStr for $ty {
            type Err = String;
            fn from_str(s: &str) -> std::result::Result<Self, String> {
                match s.trim().to_ascii_lowercase().as_str() {
                    $($text => Ok($variant),)+
                    other => Err(format!("unrecognized value `{other}`")),
                }
            }
        }
    };
}

parse_enum!(SelfTag, "bullish" => SelfTag::Bullish, "bearish" => SelfTag::Bearish,
    "none" => SelfTag::None, "" => SelfTag::None, "unclassified" => SelfTag::None);
parse_enum!(UserExperience, "novice" => UserExperience::Novice,
    "intermediate" => UserExperience::Intermediate, "professional" => UserExperience::Professional,
    "unknown" => UserExperience::Unknown, "" => UserExperience::Unknown);
parse_enum!(UserApproach, "fundamental" => UserApproach::Fundamental,
    "technical" => UserApproach::Technical, "unknown" => UserApproach::Unknown, "" => UserApproach::Unknown);
parse_enum!(UserHorizon, "short_term" => UserHorizon::ShortTerm, "long_term" => UserHorizon::LongTerm,
    "unknown" => UserHorizon::Unknown, "" => UserHorizon::Unknown);

/// One social-media post as ingested.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawMessage {
    pub message_id: String,
    pub user_id: String,
    pub timestamp: DateTime<FixedOffset>,
    pub body: String,
    pub cashtags: Vec<String>,
    pub self_tag: SelfTag,
    pub follower_count: u64,
    pub likes: u64,
    pub user_experience: UserExperience,
    pub user_approach: UserApproach,
    pub user_horizon: UserHorizon,
    /// Platform-computed sentiment in [-1, 1], when the export carries one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sentiment_score: Option<f64>,
}

impl RawMessage {
    /// Exchange-local (US Eastern) wall-clock time, truncated to the minute.
    pub fn local_time(&self) -> NaiveDateTime {
        to_exchange_local(&self.timestamp)
    }

    /// The ticker when the message mentions exactly one.
    pub fn single_ticker(&self) -> Option<&str> {
        match self.cashtags.as_slice() {
            [only] => Some(only.as_str()),
            _ => None,
        }
    }
}

pub fn to_exchange_local(ts: &DateTime<FixedOffset>) -> NaiveDateTime {
    let local = ts.with_timezone(&New_York).naive_local();
    local
        .with_second(0)
        .and_then(|t| t.with_nanosecond(0))
        .expect("zero seconds are always valid")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MessageFormat {
    Jsonl,
    Csv,
}

impl FromStr for MessageFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "jsonl" | "json" => Ok(MessageFormat::Jsonl),
            "csv" => Ok(MessageFormat::Csv),
            other => Err(Error::Invalid(format!("unknown message format `{other}`"))),
        }
    }
}

impl MessageFormat {
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => MessageFormat::Csv,
            _ => MessageFormat::Jsonl,
        }
    }
}

/// Wire record: every field optional so missing fields can be reported by name.
#[derive(Debug, Default, Deserialize)]
struct MessageRecord {
    message_id: Option<String>,
    user_id: Option<String>,
    timestamp: Option<String>,
    body: Option<String>,
    #[serde(default)]
    cashtags: Option<CashtagField>,
    self_tag: Option<String>,
    follower_count: Option<i64>,
    likes: Option<i64>,
    user_experience: Option<String>,
    user_approach: Option<String>,
    user_horizon: Option<String>,
    sentiment_score: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum CashtagField {
    List(Vec<String>),
    Joined(String),
}

impl MessageRecord {
    fn into_message(self) -> std::result::Result<RawMessage, String> {
        fn required(v: Option<String>, name: &str) -> std::result::Result<String, String> {
            match v {
                Some(s) if !s.is_empty() => Ok(s),
                _ => Err(format!("missing required field `{name}`")),
            }
        }
        fn opt_enum<T: FromStr<Err = String> + Default>(
            v: Option<String>,
            name: &str,
        ) -> std::result::Result<T, String> {
            v.map(|s| s.parse().map_err(|e| format!("{name}: {e}")))
                .transpose()
                .map(Option::unwrap_or_default)
        }
        fn count(v: Option<i64>, name: &str) -> std::result::Result<u64, String> {
            match v {
                None => Ok(0),
                Some(n) if n >= 0 => Ok(n as u64),
                Some(n) => Err(format!("{name} must be nonnegative, got {n}")),
            }
        }

        let message_id = required(self.message_id, "message_id")?;
        let user_id = required(self.user_id, "user_id")?;
        let raw_ts = required(self.timestamp, "timestamp")?;
        let timestamp =
            DateTime::parse_from_rfc3339(raw_ts.trim()).map_err(|e| format!("timestamp `{raw_ts}`: {e}"))?;
        let body = self.body.ok_or_else(|| "missing required field `body`".to_string())?;
        let cashtags = match self.cashtags {
            None => Vec::new(),
            Some(CashtagField::List(v)) => v,
            Some(CashtagField::Joined(s)) => s
                .split(|c: char| c == '|' || c == ',' || c.is_whitespace())
                .filter(|t| !t.is_empty())
                .map(str::to_string)
                .collect(),
        };
        let cashtags = cashtags
            .into_iter()
            .map(|t| normalize_cashtag(&t))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        if let Some(s) = self.sentiment_score {
            if !s.is_finite() || !(-1.0..=1.0).contains(&s) {
                return Err(format!("sentiment_score {s} outside [-1, 1]"));
            }
        }
        Ok(RawMessage {
            message_id,
            user_id,
            timestamp,
            body,
            cashtags,
            self_tag: opt_enum(self.self_tag, "self_tag")?,
            follower_count: count(self.follower_count, "follower_count")?,
            likes: count(self.likes, "likes")?,
            user_experience: opt_enum(self.user_experience, "user_experience")?,
            user_approach: opt_enum(self.user_approach, "user_approach")?,
            user_horizon: opt_enum(self.user_horizon, "user_horizon")?,
            sentiment_score: self.sentiment_score,
        })
    }
}

fn normalize_cashtag(raw: &str) -> std::result::Result<String, String> {
    let t = raw.trim().trim_start_matches('$').to_ascii_uppercase();
    if t.is_empty() || !t.chars().all(|c| c.is_ascii_alphanumeric()) {
        return Err(format!("invalid cashtag `{raw}`"));
    }
    Ok(t)
}

/// Result of loading a message file.
#[derive(Debug, Default)]
pub struct LoadedMessages {
    pub messages: Vec<RawMessage>,
    /// `(line number, reason)` for every skipped malformed record.
    pub skipped: Vec<(usize, String)>,
    pub duplicate_ids: usize,
}

/// Reads messages in file order. In strict mode the first malformed record
/// aborts with its line number; otherwise it is counted and skipped.
/// Duplicate `message_id`s keep the first occurrence.
pub fn load_messages(path: &Path, format: MessageFormat, strict: bool) -> Result<LoadedMessages> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_messages(file, path, format, strict)
}

pub fn read_messages<R: Read>(reader: R, path: &Path, format: MessageFormat, strict: bool) -> Result<LoadedMessages> {
    let mut out = LoadedMessages::default();
    let mut seen = HashSet::new();
    let mut accept = |line: usize, rec: std::result::Result<RawMessage, String>| -> Result<()> {
        match rec {
            Ok(m) => {
                if seen.insert(m.message_id.clone()) {
                    out.messages.push(m);
                } else {
                    log::warn!("{}:{line}: duplicate message_id {}", path.display(), m.message_id);
                    out.duplicate_ids += 1;
                }
                Ok(())
            }
            Err(msg) if strict => Err(Error::parse(path, line, msg)),
            Err(msg) => {
                out.skipped.push((line, msg));
                Ok(())
            }
        }
    };

    match format {
        MessageFormat::Jsonl => {
            for (idx, line) in BufReader::new(reader).lines().enumerate() {
                let line = line.map_err(|e| Error::io(path, e))?;
                let trimmed = line.trim();
                if trimmed.is_empty() || trimmed.starts_with('#') {
                    continue;
                }
                let rec = serde_json::from_str::<MessageRecord>(trimmed)
                    .map_err(|e| e.to_string())
                    .and_then(MessageRecord::into_message);
                accept(idx + 1, rec)?;
            }
        }
        MessageFormat::Csv => {
            let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(reader);
            let headers = rdr.headers()?.clone();
            for row in rdr.records() {
                let (line, rec) = match row {
                    Ok(record) => {
                        let line = record.position().map_or(0, |p| p.line() as usize);
                        let rec = record
                            .deserialize::<MessageRecord>(Some(&headers))
                            .map_err(|e| e.to_string())
                            .and_then(MessageRecord::into_message);
                        (line, rec)
                    }
                    Err(e) => {
                        let line = e.position().map_or(0, |p| p.line() as usize);
                        (line, Err(e.to_string()))
                    }
                };
                accept(line, rec)?;
            }
        }
    }
    Ok(out)
}

/// Ordered set of trading dates, usually derived from the price panel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TradingCalendar {
    dates: Vec<NaiveDate>,
}

impl TradingCalendar {
    pub fn new(dates: impl IntoIterator<Item = NaiveDate>) -> Result<Self> {
        let dates: Vec<NaiveDate> = dates.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
        if dates.is_empty() {
            return Err(Error::Invalid("trading calendar is empty".into()));
        }
        Ok(TradingCalendar { dates })
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn first(&self) -> NaiveDate {
        self.dates[0]
    }

    pub fn last(&self) -> NaiveDate {
        *self.dates.last().expect("non-empty by construction")
    }

    pub fn contains(&self, date: NaiveDate) -> bool {
        self.dates.binary_search(&date).is_ok()
    }

    /// First trading date strictly after `date`.
    pub fn next_after(&self, date: NaiveDate) -> Option<NaiveDate> {
        let idx = self.dates.partition_point(|d| *d <= date);
        self.dates.get(idx).copied()
    }

    /// Last trading date strictly before `date`.
    pub fn prev_before(&self, date: NaiveDate) -> Option<NaiveDate> {
        let idx = self.dates.partition_point(|d| *d < date);
        idx.checked_sub(1).map(|i| self.dates[i])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Session {
    Premarket,
    Market,
}

impl fmt::Display for Session {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Session::Premarket => "premarket",
            Session::Market => "market",
        })
    }
}

impl FromStr for Session {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "premarket" => Ok(Session::Premarket),
            "market" => Ok(Session::Market),
            other => Err(Error::Invalid(format!("unknown session `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SessionKey {
    pub ticker: String,
    pub trade_date: NaiveDate,
    pub session: Session,
}

const PREMARKET_LAST_MINUTE: u32 = 9 * 60 + 29;
const MARKET_LAST_MINUTE: u32 = 16 * 60;

/// Maps an exchange-local timestamp onto `(trade date, session)`.
pub fn assign_session(local: NaiveDateTime, calendar: &TradingCalendar) -> Result<(NaiveDate, Session)> {
    let date = local.date();
    if date < calendar.first() || date > calendar.last() {
        return Err(Error::OutOfRange(local.to_string()));
    }
    let minute = local.hour() * 60 + local.minute();
    if calendar.contains(date) {
        if minute <= PREMARKET_LAST_MINUTE {
            return Ok((date, Session::Premarket));
        }
        if minute <= MARKET_LAST_MINUTE {
            return Ok((date, Session::Market));
        }
    }
    calendar
        .next_after(date)
        .map(|next| (next, Session::Premarket))
        .ok_or_else(|| Error::OutOfRange(local.to_string()))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SecurityRecord {
    pub ticker: String,
    pub secstat: char,
    pub tpci: char,
    pub exchg: i32,
}

impl SecurityRecord {
    /// Active, common ordinary share, listed on a US exchange.
    pub fn is_eligible(&self) -> bool {
        self.secstat != 'I' && self.tpci == '0' && matches!(self.exchg, 11 | 12 | 14 | 17)
    }
}

#[derive(Debug, Clone, Default)]
pub struct SecurityMaster {
    records: HashMap<String, SecurityRecord>,
}

impl SecurityMaster {
    pub fn new(records: impl IntoIterator<Item = SecurityRecord>) -> Self {
        let mut map = HashMap::new();
        for r in records {
            let key = r.ticker.to_ascii_uppercase();
            if map.contains_key(&key) {
                log::warn!("security master: duplicate ticker {key}, keeping first row");
                continue;
            }
            map.insert(key, r);
        }
        SecurityMaster { records: map }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(file);
        let mut rows = Vec::new();
        for (i, rec) in rdr.deserialize::<SecurityRecord>().enumerate() {
            rows.push(rec.map_err(|e| Error::parse(path, i + 2, e.to_string()))?);
        }
        Ok(Self::new(rows))
    }

    pub fn get(&self, ticker: &str) -> Option<&SecurityRecord> {
        self.records.get(&ticker.to_ascii_uppercase())
    }

    /// Uppercase tickers in sorted order.
    pub fn tickers(&self) -> Vec<&str> {
        let mut t: Vec<&str> = self.records.keys().map(String::as_str).collect();
        t.sort_unstable();
        t
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

pub trait HasTicker {
    fn ticker(&self) -> Option<&str>;
}

impl HasTicker for RawMessage {
    fn ticker(&self) -> Option<&str> {
        self.single_ticker()
    }
}

impl<T: HasTicker, C> HasTicker for (T, C) {
    fn ticker(&self) -> Option<&str> {
        self.0.ticker()
    }
}

/// Keeps rows whose ticker is eligible in the master. Returns the kept rows
/// and the number dropped because their ticker is absent from the master.
pub fn apply_security_filters<T: HasTicker>(rows: Vec<T>, master: &SecurityMaster) -> (Vec<T>, usize) {
    let mut missing = 0usize;
    let kept = rows
        .into_iter()
        .filter(|row| match row.ticker().and_then(|t| master.get(t)) {
            Some(rec) => rec.is_eligible(),
            None => {
                missing += 1;
                false
            }
        })
        .collect();
    if missing > 0 {
        log::warn!("{missing} rows dropped: ticker absent from security master");
    }
    (kept, missing)
}

pub fn filter_single_ticker(messages: Vec<RawMessage>) -> Vec<RawMessage> {
    messages.into_iter().filter(|m| m.cashtags.len() == 1).collect()
}

pub const AUTOMATED_THRESHOLD: usize = 100;

/// `(user_id, cleaned body)` pairs posted strictly more than `threshold` times.
pub fn detect_automated<'a, I>(pairs: I, threshold: usize) -> HashSet<(String, String)>
where
    I: IntoIterator<Item = (&'a str, &'a str)>,
{
    let mut counts: HashMap<(&str, &str), usize> = HashMap::new();
    for pair in pairs {
        *counts.entry(pair).or_default() += 1;
    }
    counts
        .into_iter()
        .filter(|&(_, n)| n > threshold)
        .map(|((u, b), _)| (u.to_string(), b.to_string()))
        .collect()
}

/// Text used for automated-message detection.
pub trait CleanedText {
    fn cleaned_text(&self) -> &str;
}

impl CleanedText for String {
    fn cleaned_text(&self) -> &str {
        self
    }
}

pub fn drop_automated<C: CleanedText>(
    rows: Vec<(RawMessage, C)>,
    flagged: &HashSet<(String, String)>,
) -> Vec<(RawMessage, C)> {
    if flagged.is_empty() {
        return rows;
    }
    rows.into_iter()
        .filter(|(m, c)| !flagged.contains(&(m.user_id.clone(), c.cleaned_text().to_string())))
        .collect()
}

pub const MIN_ACTIVITY: usize = 10;

pub fn enforce_min_activity<T>(groups: BTreeMap<SessionKey, Vec<T>>, min_count: usize) -> BTreeMap<SessionKey, Vec<T>> {
    groups.into_iter().filter(|(_, v)| v.len() >= min_count).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StageCount {
    pub stage: String,
    pub count: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RestrictionReport {
    pub stages: Vec<StageCount>,
    pub premarket: usize,
    pub market: usize,
    /// Messages with an eligible ticker whose timestamp fell outside the calendar.
    pub out_of_range: usize,
    pub missing_master: usize,
}

impl RestrictionReport {
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["stage", "count"])?;
        for s in &self.stages {
            w.write_record([s.stage.as_str(), &s.count.to_string()])?;
        }
        w.flush().map_err(|e| Error::io("<restriction report>", e))?;
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct RestrictionConfig {
    pub automated_threshold: usize,
    pub min_activity: usize,
}

impl Default for RestrictionConfig {
    fn default() -> Self {
        RestrictionConfig {
            automated_threshold: AUTOMATED_THRESHOLD,
            min_activity: MIN_ACTIVITY,
        }
    }
}

pub type SessionGroups<C> = BTreeMap<SessionKey, Vec<(RawMessage, C)>>;

/// Runs the sample restrictions in order: single ticker, not automated,
/// eligible security, minimum activity per session. `clean` is called once per
/// single-ticker message; its result travels with the message. Within each
/// session cell messages are sorted by `message_id`.
pub fn restrict_sample<C, F>(
    messages: Vec<RawMessage>,
    mut clean: F,
    master: &SecurityMaster,
    calendar: &TradingCalendar,
    cfg: &RestrictionConfig,
) -> (SessionGroups<C>, RestrictionReport)
where
    C: CleanedText,
    F: FnMut(&RawMessage) -> C,
{
    let mut report = RestrictionReport::default();
    let mut stage = |name: &str, count: usize| {
        report.stages.push(StageCount {
            stage: name.to_string(),
            count,
        })
    };
    stage("input", messages.len());

    let single = filter_single_ticker(messages);
    stage("single_ticker", single.len());

    let cleaned: Vec<(RawMessage, C)> = single
        .into_iter()
        .map(|m| {
            let c = clean(&m);
            (m, c)
        })
        .collect();
    let flagged = detect_automated(
        cleaned.iter().map(|(m, c)| (m.user_id.as_str(), c.cleaned_text())),
        cfg.automated_threshold,
    );
    let human = drop_automated(cleaned, &flagged);
    stage("not_automated", human.len());

    let (eligible, missing) = apply_security_filters(human, master);
    stage("security_filters", eligible.len());

    let mut groups: SessionGroups<C> = BTreeMap::new();
    let mut out_of_range = 0usize;
    for (m, c) in eligible {
        match assign_session(m.local_time(), calendar) {
            Ok((trade_date, session)) => {
                let key = SessionKey {
                    ticker: m.cashtags[0].clone(),
                    trade_date,
                    session,
                };
                groups.entry(key).or_default().push((m, c));
            }
            Err(_) => out_of_range += 1,
        }
    }
    let mut groups = enforce_min_activity(groups, cfg.min_activity);
    for rows in groups.values_mut() {
        rows.sort_by(|a, b| a.0.message_id.cmp(&b.0.message_id));
    }
    let total: usize = groups.values().map(Vec::len).sum();
    stage("min_activity", total);

    report.premarket = groups
        .iter()
        .filter(|(k, _)| k.session == Session::Premarket)
        .map(|(_, v)| v.len())
        .sum();
    report.market = total - report.premarket;
    report.out_of_range = out_of_range;
    report.missing_master = missing;
    (groups, report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn date(y: i32, m: u32, d: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, d).unwrap()
    }

    fn at(d: NaiveDate, h: u32, min: u32) -> NaiveDateTime {
        d.and_hms_opt(h, min, 0).unwrap()
    }

    // Mon 2021-01-04 .. Fri 2021-01-08, Mon 2021-01-11, Tue 2021-01-12
    fn calendar() -> TradingCalendar {
        TradingCalendar::new([4, 5, 6, 7, 8, 11, 12].map(|d| date(2021, 1, d))).unwrap()
    }

    fn msg(id: &str, user: &str, tags: &[&str], ts: &str) -> RawMessage {
        RawMessage {
            message_id: id.into(),
            user_id: user.into(),
            timestamp: DateTime::parse_from_rfc3339(ts).unwrap(),
            body: format!("body {id}"),
            cashtags: tags.iter().map(|s| s.to_string()).collect(),
            self_tag: SelfTag::None,
            follower_count: 0,
            likes: 0,
            user_experience: UserExperience::Unknown,
            user_approach: UserApproach::Unknown,
            user_horizon: UserHorizon::Unknown,
            sentiment_score: None,
        }
    }

    #[test]
    fn session_examples() {
        let cal = calendar();
        let tue = date(2021, 1, 5);
        assert_eq!(assign_session(at(tue, 8, 15), &cal).unwrap(), (tue, Session::Premarket));
        let mon = date(2021, 1, 4);
        assert_eq!(assign_session(at(mon, 10, 0), &cal).unwrap(), (mon, Session::Market));
        let fri = date(2021, 1, 8);
        assert_eq!(
            assign_session(at(fri, 17, 30), &cal).unwrap(),
            (date(2021, 1, 11), Session::Premarket)
        );
    }

    #[test]
    fn session_boundaries() {
        let cal = calendar();
        let tue = date(2021, 1, 5);
        assert_eq!(assign_session(at(tue, 9, 29), &cal).unwrap().1, Session::Premarket);
        assert_eq!(assign_session(at(tue, 9, 30), &cal).unwrap().1, Session::Market);
        assert_eq!(assign_session(at(tue, 16, 0), &cal).unwrap(), (tue, Session::Market));
        assert_eq!(
            assign_session(at(tue, 16, 1), &cal).unwrap(),
            (date(2021, 1, 6), Session::Premarket)
        );
        // Saturday afternoon rolls to Monday
        assert_eq!(
            assign_session(at(date(2021, 1, 9), 14, 0), &cal).unwrap(),
            (date(2021, 1, 11), Session::Premarket)
        );
    }

    #[test]
    fn session_out_of_range() {
        let cal = calendar();
        assert!(matches!(
            assign_session(at(date(2021, 1, 3), 12, 0), &cal),
            Err(Error::OutOfRange(_))
        ));
        assert!(assign_session(at(date(2021, 1, 12), 17, 0), &cal).is_err());
        assert!(assign_session(at(date(2021, 1, 13), 8, 0), &cal).is_err());
    }

    #[test]
    fn session_uses_eastern_time() {
        // 13:15 UTC in January is 08:15 EST
        let m = msg("1", "u", &["AMZN"], "2021-01-05T13:15:42Z");
        assert_eq!(m.local_time(), at(date(2021, 1, 5), 8, 15));
        assert_eq!(
            assign_session(m.local_time(), &calendar()).unwrap(),
            (date(2021, 1, 5), Session::Premarket)
        );
    }

    #[test]
    fn calendar_navigation() {
        let cal = calendar();
        assert_eq!(cal.next_after(date(2021, 1, 8)), Some(date(2021, 1, 11)));
        assert_eq!(cal.prev_before(date(2021, 1, 11)), Some(date(2021, 1, 8)));
        assert_eq!(cal.prev_before(date(2021, 1, 4)), None);
        assert!(TradingCalendar::new(Vec::new()).is_err());
    }

    #[test]
    fn single_ticker_filter() {
        let ts = "2021-01-05T13:15:00Z";
        let kept = filter_single_ticker(vec![
            msg("a", "u", &["AMZN"], ts),
            msg("b", "u", &["AMZN", "TSLA"], ts),
            msg("c", "u", &[], ts),
        ]);
        let ids: Vec<_> = kept.iter().map(|m| m.message_id.as_str()).collect();
        assert_eq!(ids, ["a"]);
    }

    #[test]
    fn automated_threshold_is_strict() {
        let mut pairs = vec![("bot", "buy now"); 101];
        pairs.extend(vec![("human", "buy now"); 100]);
        let flagged = detect_automated(pairs, 100);
        assert_eq!(flagged.len(), 1);
        assert!(flagged.contains(&("bot".to_string(), "buy now".to_string())));
    }

    #[test]
    fn automated_counts_per_user() {
        let mut pairs = vec![("u1", "moon"); 60];
        pairs.extend(vec![("u2", "moon"); 60]);
        assert!(detect_automated(pairs, 100).is_empty());
    }

    #[test]
    fn security_filter_rules() {
        let rec = |t: &str, s: char, p: char, e: i32| SecurityRecord {
            ticker: t.into(),
            secstat: s,
            tpci: p,
            exchg: e,
        };
        let master = SecurityMaster::new([
            rec("AAA", 'A', '0', 11),
            rec("BBB", 'I', '0', 11),
            rec("CCC", 'A', '0', 19),
            rec("DDD", 'A', '1', 12),
        ]);
        let ts = "2021-01-05T13:15:00Z";
        let rows = ["AAA", "BBB", "CCC", "DDD", "EEE"]
            .iter()
            .map(|t| msg(t, "u", &[t], ts))
            .collect();
        let (kept, missing) = apply_security_filters(rows, &master);
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].message_id, "AAA");
        assert_eq!(missing, 1);
    }

    #[test]
    fn min_activity_boundary() {
        let key = |t: &str| SessionKey {
            ticker: t.into(),
            trade_date: date(2021, 1, 5),
            session: Session::Premarket,
        };
        let mut groups = BTreeMap::new();
        groups.insert(key("TEN"), vec![0; 10]);
        groups.insert(key("NINE"), vec![0; 9]);
        let kept = enforce_min_activity(groups, 10);
        assert_eq!(kept.len(), 1);
        assert!(kept.contains_key(&key("TEN")));
    }

    #[test]
    fn empty_corpus_report() {
        let master = SecurityMaster::default();
        let (groups, report) = restrict_sample(
            Vec::new(),
            |m: &RawMessage| m.body.clone(),
            &master,
            &calendar(),
            &RestrictionConfig::default(),
        );
        assert!(groups.is_empty());
        assert!(report.stages.iter().all(|s| s.count == 0));
        let names: Vec<_> = report.stages.iter().map(|s| s.stage.as_str()).collect();
        assert_eq!(
            names,
            [
                "input",
                "single_ticker",
                "not_automated",
                "security_filters",
                "min_activity"
            ]
        );
    }

    #[test]
    fn jsonl_lenient_and_strict() {
        let data = concat!(
            r#"{"message_id":"1","user_id":"u","timestamp":"2021-01-05T08:15:00-05:00","body":"hi","cashtags":["amzn"],"self_tag":"bullish","follower_count":5,"likes":1,"user_experience":"novice","user_approach":"technical","user_horizon":"short_term"}"#,
            "\n",
            r#"{"user_id":"u","timestamp":"2021-01-05T08:15:00-05:00","body":"no id","cashtags":[]}"#,
            "\n",
            r#"{"message_id":"3","user_id":"u","timestamp":"2021-01-05T08:16:00-05:00","body":"x","cashtags":["TSLA"]}"#,
            "\n"
        );
        let path = Path::new("mem.jsonl");
        let lenient = read_messages(data.as_bytes(), path, MessageFormat::Jsonl, false).unwrap();
        assert_eq!(lenient.messages.len(), 2);
        assert_eq!(lenient.skipped.len(), 1);
        assert_eq!(lenient.skipped[0].0, 2);
        let first = &lenient.messages[0];
        assert_eq!(first.cashtags, ["AMZN"]);
        assert_eq!(first.self_tag, SelfTag::Bullish);
        assert_eq!(first.user_horizon, UserHorizon::ShortTerm);
        assert_eq!(lenient.messages[1].follower_count, 0);

        let err = read_messages(data.as_bytes(), path, MessageFormat::Jsonl, true).unwrap_err();
        match err {
            Error::Parse { line, message, .. } => {
                assert_eq!(line, 2);
                assert!(message.contains("message_id"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn csv_messages_and_duplicates() {
        let data = "message_id,user_id,timestamp,body,cashtags,self_tag,follower_count,likes,user_experience,user_approach,user_horizon\n\
            1,u,2021-01-05T08:15:00-05:00,hello,AMZN|TSLA,bearish,3,0,,,\n\
            1,u,2021-01-05T08:15:00-05:00,dup,AMZN,,,,,,\n\
            2,v,not-a-time,bad,AMZN,,,,,,\n";
        let out = read_messages(data.as_bytes(), Path::new("m.csv"), MessageFormat::Csv, false).unwrap();
        assert_eq!(out.messages.len(), 1);
        assert_eq!(out.messages[0].cashtags, ["AMZN", "TSLA"]);
        assert_eq!(out.messages[0].self_tag, SelfTag::Bearish);
        assert_eq!(out.duplicate_ids, 1);
        assert_eq!(out.skipped.len(), 1);
        assert_eq!(out.skipped[0].0, 4);
    }
}
