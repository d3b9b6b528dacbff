//! Regenerates the synthetic fixture set under `fixtures/`.
//!
//! ```text
//! cargo run -p emopipe-cli --example make_fixtures [-- OUT_DIR]
//! ```

use std::fmt::Write as _;
use std::path::PathBuf;

use chrono::{Datelike, Days, NaiveDate, Weekday};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const ELIGIBLE: [&str; 4] = ["AAA", "BBB", "CCC", "DDD"];

const TEMPLATES: [(&str, &[&str]); 7] = [
    (
        "neutral",
        &[
            "holding {n} shares into earnings",
            "earnings call is at 8am tomorrow",
            "watching the open today",
            "volume looks average so far",
            "anyone know the ex dividend date",
            "added to my watchlist",
        ],
    ),
    (
        "happy",
        &[
            "love this stock so much :)",
            "great quarter, going to the moon 🚀",
            "so happy with my gains today 😀",
            "best trade of the year, feeling amazing",
            "awesome run, thank you longs :D",
            "this makes me smile every morning 😊",
        ],
    ),
    (
        "sad",
        &[
            "lost so much money on this :(",
            "feeling down about my position 😢",
            "sad to see it bleed again",
            "another red day, i'm heartbroken",
            "miss the old highs so much 😞",
            "depressing chart, cried a little",
        ],
    ),
    (
        "anger",
        &[
            "this is a scam and i'm furious 😡",
            "management is terrible, i hate them",
            "so angry at these shorts",
            "stop lying to shareholders, rage",
            "mad about this dilution 🤬",
            "furious that they missed again",
        ],
    ),
    (
        "disgust",
        &[
            "disgusting dilution again 🤮",
            "gross accounting, makes me sick",
            "revolting behaviour from the ceo",
            "yuck, what a nasty report",
            "this company is vile 🤢",
            "sickening insider selling",
        ],
    ),
    (
        "surprise",
        &[
            "wow did not expect that 😮",
            "what a surprise move this morning",
            "whoa, huge gap up out of nowhere",
            "shocked by these numbers 😲",
            "unexpected beat, omg",
            "no way it jumped {n} percent",
        ],
    ),
    (
        "fear",
        &[
            "scared this will crash 😱",
            "worried about the drop tomorrow",
            "terrified of margin calls",
            "afraid the bubble pops soon",
            "nervous about my puts 😨",
            "panic selling everywhere, scary",
        ],
    ),
];

const FILLER: [&str; 12] = [
    "honestly",
    "today",
    "again",
    "guys",
    "right now",
    "lol",
    "imo",
    "fr",
    "ngl",
    "tbh",
    "hodl",
    "stonks",
];

const TYPOS: [(&str, &str); 6] = [
    ("money", "mony"),
    ("terrible", "terible"),
    ("tomorrow", "tommorow"),
    ("shareholders", "sharehodlers"),
    ("ilike", "ilike"),
    ("amazing", "amazng"),
];

fn trading_days(from: NaiveDate, to: NaiveDate) -> Vec<NaiveDate> {
    from.iter_days()
        .take_while(|d| *d <= to)
        .filter(|d| !matches!(d.weekday(), Weekday::Sat | Weekday::Sun))
        .collect()
}

fn body(rng: &mut ChaCha8Rng, class: usize) -> String {
    let t = TEMPLATES[class].1.choose(rng).unwrap();
    let mut s = t.replace("{n}", &rng.random_range(2..500).to_string());
    if rng.random_bool(0.15) {
        let (right, wrong) = TYPOS.choose(rng).unwrap();
        s = s.replace(right, wrong);
    }
    if rng.random_bool(0.4) {
        s.push(' ');
        s.push_str(FILLER.choose(rng).unwrap());
    }
    if rng.random_bool(0.1) {
        s = format!("@trader{} {s}", rng.random_range(1..50));
    }
    s
}

fn json_str(s: &str) -> String {
    serde_json::to_string(s).unwrap()
}

struct Msg {
    user: String,
    ts: String,
    body: String,
    tags: Vec<String>,
    followers: u64,
    self_tag: &'static str,
}

fn message(rng: &mut ChaCha8Rng, user: String, ts: String, tickers: &[&str]) -> Msg {
    let class = rng.random_range(0..7);
    let cashtags: String = tickers.iter().map(|t| format!("${t} ")).collect();
    Msg {
        user,
        ts,
        body: format!("{cashtags}{}", body(rng, class)),
        tags: tickers.iter().map(|t| t.to_string()).collect(),
        followers: if rng.random_bool(0.2) {
            0
        } else {
            rng.random_range(1..5000)
        },
        self_tag: ["bullish", "bearish", ""][rng.random_range(0..3)],
    }
}

fn ts(d: NaiveDate, h: u32, m: u32) -> String {
    // February: US Eastern is UTC-5.
    format!("{d}T{h:02}:{m:02}:00-05:00")
}

fn messages(rng: &mut ChaCha8Rng, days: &[NaiveDate]) -> String {
    let users: Vec<String> = (0..60).map(|i| format!("u{i:03}")).collect();
    let user = |rng: &mut ChaCha8Rng| users.choose(rng).unwrap().clone();
    let mut out: Vec<Msg> = Vec::new();
    for &d in days {
        for t in ELIGIBLE {
            for _ in 0..11 {
                let (h, m) = (rng.random_range(5..9), rng.random_range(0..60));
                let u = user(rng);
                out.push(message(rng, u, ts(d, h, m), &[t]));
            }
        }
    }
    for &d in &days[..2] {
        for _ in 0..10 {
            let (h, m) = (rng.random_range(10..16), rng.random_range(0..60));
            let u = user(rng);
            out.push(message(rng, u, ts(d, h, m), &["AAA"]));
        }
    }
    for i in 0..101 {
        let d = days[i % days.len()];
        out.push(Msg {
            user: "alertbot".into(),
            ts: ts(d, 7, (i % 60) as u32),
            body: "$BBB alert: unusual options volume detected".into(),
            tags: vec!["BBB".into()],
            followers: 12,
            self_tag: "",
        });
    }
    for _ in 0..15 {
        let d = *days.choose(rng).unwrap();
        let (u, m) = (user(rng), rng.random_range(0..60));
        out.push(message(rng, u, ts(d, 8, m), &["AAA", "CCC"]));
    }
    for _ in 0..12 {
        let d = *days.choose(rng).unwrap();
        let (u, m) = (user(rng), rng.random_range(0..60));
        out.push(message(rng, u, ts(d, 8, m), &["EEE"]));
    }
    for _ in 0..8 {
        let d = *days.choose(rng).unwrap();
        let (u, m) = (user(rng), rng.random_range(0..60));
        out.push(message(rng, u, ts(d, 8, m), &["ZZZ"]));
    }
    let weekend = NaiveDate::from_ymd_opt(2021, 2, 6).unwrap();
    let early = NaiveDate::from_ymd_opt(2019, 6, 3).unwrap();
    for i in 0..36 {
        let t = ELIGIBLE[i % 4];
        let stamp = match i % 3 {
            0 => ts(
                *days.choose(rng).unwrap(),
                rng.random_range(17..21),
                rng.random_range(0..60),
            ),
            1 => ts(weekend, rng.random_range(9..20), rng.random_range(0..60)),
            _ => ts(early, 8, rng.random_range(0..60)),
        };
        let u = user(rng);
        out.push(message(rng, u, stamp, &[t]));
    }
    assert_eq!(out.len(), 500);
    out.shuffle(rng);

    let mut s = String::new();
    for (i, m) in out.iter().enumerate() {
        let tags: Vec<String> = m.tags.iter().map(|t| json_str(t)).collect();
        writeln!(
            s,
            "{{\"message_id\":\"m{:04}\",\"user_id\":{},\"timestamp\":\"{}\",\"body\":{},\"cashtags\":[{}],\"self_tag\":\"{}\",\"follower_count\":{},\"likes\":{}}}",
            i + 1,
            json_str(&m.user),
            m.ts,
            json_str(&m.body),
            tags.join(","),
            m.self_tag,
            m.followers,
            (i * 7) % 13
        )
        .unwrap();
    }
    s
}

fn prices(rng: &mut ChaCha8Rng, days: &[NaiveDate]) -> String {
    let firms = [("AAA", 1), ("BBB", 2), ("CCC", 3), ("DDD", 4), ("EEE", 1), ("FFF", 2)];
    let mut s = String::from("firm_id,date,industry,open,close,shares\n");
    for (f, ind) in firms {
        let mut close: f64 = rng.random_range(10.0..80.0);
        let shares = rng.random_range(10_000_000u64..500_000_000);
        for d in days {
            let open = close * (1.0 + rng.random_range(-0.01..0.01));
            close = open * (1.0 + rng.random_range(-0.03..0.03));
            writeln!(s, "{f},{d},{ind},{open:.4},{close:.4},{shares}").unwrap();
        }
    }
    s
}

fn labeled(rng: &mut ChaCha8Rng) -> String {
    let mut rows: Vec<String> = Vec::new();
    for (class, (name, _)) in TEMPLATES.iter().enumerate() {
        for i in 0..50 {
            let annotator = if i % 5 == 0 { "llm" } else { "human" };
            let text = body(rng, class);
            let quoted = text.replace('"', "\"\"");
            rows.push(format!("\"{quoted}\",{name},{annotator}"));
        }
    }
    rows.shuffle(rng);
    format!("text,label,annotator\n{}\n", rows.join("\n"))
}

const MASTER: &str = "ticker,secstat,tpci,exchg
AAA,A,0,11
BBB,A,0,12
CCC,A,0,14
DDD,A,0,11
EEE,A,F,11
FFF,A,0,17
";

const COMPANIES: &str = "# lowercase company names mapped to <company>
alphaco
betacorp
";

const CONFIG: &str = r#"# End-to-end configuration for the synthetic fixture set.
seed = 42
out_dir = "out"

[inputs]
messages = "messages.jsonl"
prices = "prices.csv"
security_master = "security_master.csv"
labeled = "labeled.csv"
companies = "companies.txt"
specs = "regressions.toml"

[corpus]
automated_threshold = 100
min_activity = 10

[model]
kind = "softmax"

[evaluate]
folds = 5

[aggregate]
weighting = "follower"
content_splits = true

[panel]
session = "premarket"

[panel.returns.volatility]
unit = "calendar_days"
length = 183

[eventstudy]
window = 3
emotions = ["happy", "fear"]
"#;

const SPECS: &str = r#"# Regressions on the fixture panel. Tiny sample: for plumbing, not inference.

[[regression]]
name = "valence"
dependent = "open_close"
regressors = ["valence", "sentiment"]
winsor = false

[[regression]]
name = "controls"
dependent = "open_close"
regressors = ["valence", "close_open", "lag_open_close"]
cluster = ["industry"]

[[regression]]
name = "pooled"
dependent = "open_close"
regressors = ["valence"]
fe = []
cluster = []
winsor = false

[[regression]]
name = "leads"
dependent = "open_close"
regressors = ["valence"]
cluster = ["industry"]
winsor = false
leads = [0, 1]

[summary]
columns = ["open_close", "close_open", "valence", "sentiment", "n"]

[correlation]
columns = ["open_close", "valence", "sentiment", "happy", "fear"]
"#;

fn main() -> std::io::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures"));
    std::fs::create_dir_all(&out)?;
    let mut rng = ChaCha8Rng::seed_from_u64(20210201);
    let all_days = trading_days(
        NaiveDate::from_ymd_opt(2020, 3, 2).unwrap(),
        NaiveDate::from_ymd_opt(2021, 3, 31).unwrap(),
    );
    let start = NaiveDate::from_ymd_opt(2021, 2, 1).unwrap();
    let msg_days: Vec<NaiveDate> = all_days.iter().copied().filter(|d| *d >= start).take(7).collect();
    assert_eq!(msg_days.last(), Some(&(start + Days::new(8))));

    std::fs::write(out.join("messages.jsonl"), messages(&mut rng, &msg_days))?;
    std::fs::write(out.join("prices.csv"), prices(&mut rng, &all_days))?;
    std::fs::write(out.join("labeled.csv"), labeled(&mut rng))?;
    std::fs::write(out.join("security_master.csv"), MASTER)?;
    std::fs::write(out.join("companies.txt"), COMPANIES)?;
    std::fs::write(out.join("config.toml"), CONFIG)?;
    std::fs::write(out.join("regressions.toml"), SPECS)?;
    println!("fixtures written to {}", out.display());
    Ok(())
}
