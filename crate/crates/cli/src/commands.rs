use std::collections::{BTreeMap, HashMap};
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use anyhow::Context;
use chrono::NaiveDate;
use emopipe::aggregate::{
    aggregate_all, daily_shares, emotion_time_series, read_firm_sessions, write_event_study, write_firm_sessions,
    FinanceDictionary, FirmSessionRecord,
};
use emopipe::corpus::{
    load_messages, restrict_sample, MessageFormat, RawMessage, RestrictionConfig, SecurityMaster, Session, SessionKey,
    TradingCalendar,
};
use emopipe::econo::{
    compute_returns, correlation_matrix, correlation_table, fit_fe_model, fit_interaction_model, fit_leads,
    regression_table, summary_stats, summary_table, write_correlation_csv, write_regression_csv, write_summary_csv,
    Panel, RegressionResult,
};
use emopipe::emoclass::{
    cross_validate, load_labeled, load_predictions, train_model, write_predictions, CvReport, Emotion,
    EmotionDistribution, EmotionModel, PredictionRecord,
};
use emopipe::textprep::{
    build_frequency_dictionary, expand_contractions, lex, load_word_list, normalize, normalize_message, repair_token,
    standard_words, strip_artifacts, CleanMessage, ContractionTable, EmoLexicon, Exclusions, FrequencyDictionary,
    Resources,
};
use rayon::prelude::*;

use crate::config::{invalid, RunConfig};
use crate::meta::{read_body, Header};
use crate::specs::{Fit, SpecSet};

pub const CLEAN_MESSAGES: &str = "clean_messages.jsonl";
pub const SESSIONS: &str = "sessions.csv";
pub const RESTRICTION_REPORT: &str = "restriction_report.csv";
pub const VOCABULARY: &str = "vocabulary.tsv";
pub const CORRECTIONS: &str = "corrections.tsv";
pub const MODEL: &str = "model.json";
pub const CV_FOLDS: &str = "cv_folds.csv";
pub const CV_REPORT: &str = "cv_report.txt";
pub const CONFUSION: &str = "confusion.csv";
pub const CONFUSION_COUNTS: &str = "confusion_counts.csv";
pub const PREDICTIONS: &str = "predictions.jsonl";
pub const FIRM_SESSIONS: &str = "firm_sessions.csv";
pub const PANEL: &str = "panel.csv";
pub const REGRESSIONS_CSV: &str = "regressions.csv";
pub const REGRESSIONS_TXT: &str = "regressions.txt";
pub const SUMMARY_CSV: &str = "summary_stats.csv";
pub const SUMMARY_TXT: &str = "summary_stats.txt";
pub const CORRELATIONS_CSV: &str = "correlations.csv";
pub const CORRELATIONS_TXT: &str = "correlations.txt";
pub const EVENT_STUDY: &str = "event_study.csv";

fn header(cfg: &RunConfig, command: &str) -> Header {
    Header::new(command, &cfg.config_hash, cfg.seed)
}

/// Artifact produced by an earlier subcommand; its absence is a validation error.
fn upstream(cfg: &RunConfig, name: &str, producer: &str) -> anyhow::Result<std::path::PathBuf> {
    let p = cfg.out(name);
    if p.is_file() {
        Ok(p)
    } else {
        Err(invalid(format!(
            "{} not found; run `emopipe {producer}` first",
            p.display()
        )))
    }
}

fn ensure_out_dir(cfg: &RunConfig) -> anyhow::Result<()> {
    std::fs::create_dir_all(&cfg.out_dir).with_context(|| format!("cannot create {}", cfg.out_dir.display()))
}

struct Stage(&'static str, Instant);

impl Stage {
    fn start(name: &'static str) -> Self {
        Stage(name, Instant::now())
    }

    fn done(self, count: usize) {
        log::info!("{}: {count} rows in {:.2?}", self.0, self.1.elapsed());
    }
}

fn load_master(cfg: &RunConfig) -> anyhow::Result<Option<SecurityMaster>> {
    cfg.inputs
        .security_master
        .as_deref()
        .map(SecurityMaster::load)
        .transpose()
        .map_err(Into::into)
}

/// Text-normalization resources, with builtin data wherever the config names no file.
pub fn resources(cfg: &RunConfig, master: Option<&SecurityMaster>) -> anyhow::Result<Resources> {
    let med = cfg.textprep.max_edit_distance;
    let dictionary = match &cfg.inputs.dictionary {
        Some(p) => FrequencyDictionary::load(p, med)?,
        None => FrequencyDictionary::builtin(med),
    };
    let mut res = Resources::new(dictionary);
    if let Some(p) = &cfg.inputs.lexicon {
        res.lexicon = EmoLexicon::load(p)?;
    }
    if let Some(p) = &cfg.inputs.contractions {
        res.contractions = ContractionTable::load(p)?;
    }
    if let Some(p) = &cfg.inputs.companies {
        res.names.companies = load_word_list(p)?;
    }
    if let Some(m) = master {
        res.names.tickers = m.tickers().iter().map(|t| t.to_lowercase()).collect();
    }
    res.min_correction_len = cfg.textprep.min_correction_len;
    Ok(res)
}

/// Tokens as they reach spell repair.
fn lexed(body: &str, res: &Resources) -> Vec<String> {
    let (stripped, _) = strip_artifacts(body);
    let lowered = stripped.to_lowercase().replace('\u{2019}', "'");
    lex(&expand_contractions(&lowered, &res.contractions), &res.lexicon)
}

fn trading_calendar(cfg: &RunConfig) -> anyhow::Result<TradingCalendar> {
    let prices = Panel::read_csv(cfg.input("prices"))?;
    Ok(TradingCalendar::new(prices.dates().iter().copied())?)
}

fn load_raw(cfg: &RunConfig) -> anyhow::Result<Vec<RawMessage>> {
    let path = cfg.input("messages");
    let format = match &cfg.corpus.format {
        Some(f) => f.parse().map_err(|e| invalid(format!("corpus.format: {e}")))?,
        None => MessageFormat::from_path(path),
    };
    let loaded = load_messages(path, format, cfg.strict)?;
    for (line, why) in loaded.skipped.iter().take(20) {
        log::warn!("{}:{line}: skipped: {why}", path.display());
    }
    if loaded.skipped.len() > 20 {
        log::warn!("{} more malformed records skipped", loaded.skipped.len() - 20);
    }
    if loaded.duplicate_ids > 0 {
        log::warn!("{} duplicate message ids ignored", loaded.duplicate_ids);
    }
    Ok(loaded.messages)
}

fn sorted_counts(counts: HashMap<String, u64>) -> Vec<(String, u64)> {
    let mut v: Vec<(String, u64)> = counts.into_iter().collect();
    v.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    v
}

pub fn preprocess(cfg: &RunConfig) -> anyhow::Result<()> {
    cfg.require(&["messages", "security_master", "prices"])?;
    ensure_out_dir(cfg)?;
    let master = load_master(cfg)?.expect("required");
    let res = resources(cfg, Some(&master))?;
    let calendar = trading_calendar(cfg)?;

    let stage = Stage::start("load");
    let messages = load_raw(cfg)?;
    stage.done(messages.len());

    let stage = Stage::start("normalize");
    let cleaned: HashMap<&str, CleanMessage> = messages
        .par_iter()
        .filter(|m| m.single_ticker().is_some())
        .map(|m| (m.message_id.as_str(), normalize_message(m, &res)))
        .collect();
    stage.done(cleaned.len());

    let stage = Stage::start("restrict");
    let lexed_by_id: HashMap<String, Vec<String>> = messages
        .par_iter()
        .map(|m| (m.message_id.clone(), lexed(&m.body, &res)))
        .collect();
    let rcfg = RestrictionConfig {
        automated_threshold: cfg.corpus.automated_threshold,
        min_activity: cfg.corpus.min_activity,
    };
    let (groups, report) = restrict_sample(
        messages.clone(),
        |m| cleaned[m.message_id.as_str()].clone(),
        &master,
        &calendar,
        &rcfg,
    );
    let retained: usize = groups.values().map(Vec::len).sum();
    stage.done(retained);

    let h = header(cfg, "preprocess");
    h.clone()
        .with("messages", retained)
        .write_file(&cfg.out(CLEAN_MESSAGES), |w| {
            for rows in groups.values() {
                for (_, c) in rows {
                    serde_json::to_writer(&mut *w, c)?;
                    w.write_all(b"\n")?;
                }
            }
            Ok(())
        })?;
    h.clone().write_file(&cfg.out(SESSIONS), |w| {
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(["message_id", "ticker", "date", "session"])?;
        for (k, rows) in &groups {
            for (m, _) in rows {
                csv.write_record([
                    m.message_id.as_str(),
                    &k.ticker,
                    &k.trade_date.to_string(),
                    &k.session.to_string(),
                ])?;
            }
        }
        csv.flush()?;
        Ok(())
    })?;
    h.clone()
        .with("premarket", report.premarket)
        .with("market", report.market)
        .with("out_of_calendar", report.out_of_range)
        .with("missing_security_master", report.missing_master)
        .write_file(&cfg.out(RESTRICTION_REPORT), |w| Ok(report.write_csv(w)?))?;

    let stage = Stage::start("vocabulary");
    let retained_tokens: Vec<Vec<String>> = groups
        .values()
        .flatten()
        .map(|(m, _)| lexed_by_id[&m.message_id].clone())
        .collect();
    let standard = match &cfg.inputs.standard_words {
        Some(p) => load_word_list(p)?,
        None => standard_words(),
    };
    let exclusions = Exclusions {
        tickers: res.names.tickers.clone(),
        lexicon: res.lexicon.clone(),
        standard_words: standard,
    };
    let vocab: Vec<(String, u64)> =
        match build_frequency_dictionary(&retained_tokens, &exclusions, cfg.textprep.max_edit_distance) {
            Ok(d) => sorted_counts(d.iter().map(|(w, c)| (w.to_string(), c)).collect()),
            Err(emopipe::Error::EmptyVocabulary) => Vec::new(),
            Err(e) => return Err(e.into()),
        };
    stage.done(vocab.len());
    h.clone().write_file(&cfg.out(VOCABULARY), |w| {
        writeln!(w, "word\tcount")?;
        for (word, count) in &vocab {
            writeln!(w, "{word}\t{count}")?;
        }
        Ok(())
    })?;

    let mut repairs: HashMap<(String, String), u64> = HashMap::new();
    for tokens in &retained_tokens {
        for t in tokens {
            let fixed = repair_token(t, &res);
            if fixed.len() != 1 || fixed[0] != *t {
                *repairs.entry((t.clone(), fixed.join(" "))).or_default() += 1;
            }
        }
    }
    let mut repairs: Vec<((String, String), u64)> = repairs.into_iter().collect();
    repairs.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    h.write_file(&cfg.out(CORRECTIONS), |w| {
        writeln!(w, "token\treplacement\tcount")?;
        for ((from, to), n) in &repairs {
            writeln!(w, "{from}\t{to}\t{n}")?;
        }
        Ok(())
    })?;
    Ok(())
}

fn labeled_corpus(cfg: &RunConfig) -> anyhow::Result<(Vec<Vec<String>>, Vec<Emotion>)> {
    cfg.require(&["labeled"])?;
    let master = load_master(cfg)?;
    let res = resources(cfg, master.as_ref())?;
    let rows = load_labeled(cfg.input("labeled"))?;
    if rows.is_empty() {
        return Err(invalid(format!(
            "inputs.labeled: {} has no rows",
            cfg.input("labeled").display()
        )));
    }
    let docs = rows.par_iter().map(|r| normalize(&r.text, &res).tokens).collect();
    let labels = rows.iter().map(|r| r.label).collect();
    Ok((docs, labels))
}

pub fn train(cfg: &RunConfig) -> anyhow::Result<()> {
    let (docs, labels) = labeled_corpus(cfg)?;
    ensure_out_dir(cfg)?;
    let stage = Stage::start("train");
    let model = train_model(&docs, &labels, &cfg.model)?;
    stage.done(docs.len());
    header(cfg, "train")
        .with("rows", docs.len())
        .with("classifier", model.source())
        .write_file(&cfg.out(MODEL), |w| Ok(serde_json::to_writer(&mut *w, &model)?))
}

pub fn load_model(path: &Path) -> anyhow::Result<EmotionModel> {
    serde_json::from_str(&read_body(path)?).with_context(|| format!("cannot parse model {}", path.display()))
}

fn cv_report_text(r: &CvReport, classifier: &str) -> String {
    let ms = |m: emopipe::emoclass::MeanSd| format!("{:.4} [{:.4}]", m.mean, m.sd);
    let mut out = format!("{}-fold cross-validation, seed {}\n\n", r.k, r.seed);
    let rows = [
        vec![
            "Model".to_string(),
            "Loss".into(),
            "Accuracy".into(),
            "Loss (3 classes)".into(),
            "Accuracy (3 classes)".into(),
        ],
        vec![
            classifier.to_string(),
            ms(r.loss),
            ms(r.accuracy),
            ms(r.loss3),
            ms(r.accuracy3),
        ],
    ];
    let widths: Vec<usize> = (0..5)
        .map(|j| rows.iter().map(|row| row[j].len()).max().unwrap_or(0))
        .collect();
    for row in &rows {
        let cells: Vec<String> = row.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect();
        out.push_str(cells.join("  ").trim_end());
        out.push('\n');
    }
    out.push_str("\nFold sizes:");
    for f in &r.folds {
        out.push_str(&format!(" {}", f.n_test));
    }
    out.push('\n');
    for w in &r.warnings {
        out.push_str(&format!("warning: {w}\n"));
    }
    out
}

pub fn evaluate(cfg: &RunConfig) -> anyhow::Result<()> {
    let (docs, labels) = labeled_corpus(cfg)?;
    if cfg.evaluate.folds < 2 {
        return Err(invalid("evaluate.folds: must be at least 2"));
    }
    ensure_out_dir(cfg)?;
    let stage = Stage::start("cross-validate");
    let report = cross_validate(&labels, cfg.evaluate.folds, cfg.seed, |train, test| {
        let d: Vec<Vec<String>> = train.iter().map(|&i| docs[i].clone()).collect();
        let l: Vec<Emotion> = train.iter().map(|&i| labels[i]).collect();
        let model = train_model(&d, &l, &cfg.model)?;
        Ok(test.iter().map(|&i| model.predict_tokens(&docs[i])).collect())
    })?;
    stage.done(docs.len());
    let classifier = format!("{:?}", cfg.model.kind).to_lowercase();
    let h = header(cfg, "evaluate")
        .with("classifier", &classifier)
        .with("folds", report.k);

    h.clone().write_file(&cfg.out(CV_FOLDS), |w| {
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(["fold", "n_test", "loss", "accuracy", "loss3", "accuracy3"])?;
        for f in &report.folds {
            csv.write_record([
                f.fold.to_string(),
                f.n_test.to_string(),
                f.loss.to_string(),
                f.accuracy.to_string(),
                f.loss3.to_string(),
                f.accuracy3.to_string(),
            ])?;
        }
        let n = report.folds.iter().map(|f| f.n_test).sum::<usize>();
        let (l, a, l3, a3) = (report.loss, report.accuracy, report.loss3, report.accuracy3);
        csv.write_record([
            "mean".into(),
            n.to_string(),
            l.mean.to_string(),
            a.mean.to_string(),
            l3.mean.to_string(),
            a3.mean.to_string(),
        ])?;
        csv.write_record([
            "sd".into(),
            String::new(),
            l.sd.to_string(),
            a.sd.to_string(),
            l3.sd.to_string(),
            a3.sd.to_string(),
        ])?;
        csv.flush()?;
        Ok(())
    })?;
    h.clone().write_file(&cfg.out(CV_REPORT), |w| {
        Ok(w.write_all(cv_report_text(&report, &classifier).as_bytes())?)
    })?;

    let mut head = vec!["true\\predicted".to_string()];
    head.extend(Emotion::ALL.iter().map(|e| e.to_string()));
    h.clone().write_file(&cfg.out(CONFUSION), |w| {
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(&head)?;
        for (e, row) in Emotion::ALL.iter().zip(report.confusion.row_normalized()) {
            let mut rec = vec![e.to_string()];
            rec.extend(row.iter().map(f64::to_string));
            csv.write_record(&rec)?;
        }
        csv.flush()?;
        Ok(())
    })?;
    h.write_file(&cfg.out(CONFUSION_COUNTS), |w| {
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(&head)?;
        for (e, row) in Emotion::ALL.iter().zip(&report.confusion.counts) {
            let mut rec = vec![e.to_string()];
            rec.extend(row.iter().map(u64::to_string));
            csv.write_record(&rec)?;
        }
        csv.flush()?;
        Ok(())
    })
}

fn read_clean(path: &Path) -> anyhow::Result<Vec<CleanMessage>> {
    read_body(path)?
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).with_context(|| format!("{}: record {}", path.display(), i + 1)))
        .collect()
}

pub fn predict(cfg: &RunConfig) -> anyhow::Result<()> {
    let model_path = upstream(cfg, MODEL, "train")?;
    let clean_path = upstream(cfg, CLEAN_MESSAGES, "preprocess")?;
    let model = load_model(&model_path)?;
    let clean = read_clean(&clean_path)?;
    let stage = Stage::start("predict");
    let records: Vec<PredictionRecord> = clean
        .par_iter()
        .map(|c| PredictionRecord {
            message_id: c.message_id.clone(),
            probs: model.predict(c),
            source: model.source().to_string(),
        })
        .collect();
    stage.done(records.len());
    header(cfg, "predict")
        .with("classifier", model.source())
        .write_file(&cfg.out(PREDICTIONS), |w| {
            write_predictions(&mut *w, &[], &records)?;
            Ok(())
        })
}

pub fn aggregate(cfg: &RunConfig) -> anyhow::Result<()> {
    cfg.require(&["messages"])?;
    let clean_path = upstream(cfg, CLEAN_MESSAGES, "preprocess")?;
    let sessions_path = upstream(cfg, SESSIONS, "preprocess")?;
    let pred_path = match &cfg.inputs.predictions {
        Some(p) => p.clone(),
        None => upstream(cfg, PREDICTIONS, "predict")?,
    };
    let raw: HashMap<String, RawMessage> = load_raw(cfg)?.into_iter().map(|m| (m.message_id.clone(), m)).collect();
    let clean: HashMap<String, CleanMessage> = read_clean(&clean_path)?
        .into_iter()
        .map(|c| (c.message_id.clone(), c))
        .collect();

    let mut groups: BTreeMap<SessionKey, Vec<(RawMessage, CleanMessage)>> = BTreeMap::new();
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(&sessions_path)?;
    for row in rdr.records() {
        let row = row?;
        let id = &row[0];
        let key = SessionKey {
            ticker: row[1].to_string(),
            trade_date: row[2]
                .parse()
                .with_context(|| format!("{}: bad date", sessions_path.display()))?,
            session: row[3].parse()?,
        };
        let m = raw
            .get(id)
            .with_context(|| format!("message {id} is missing from the message file"))?;
        let c = clean
            .get(id)
            .with_context(|| format!("message {id} is missing from {CLEAN_MESSAGES}"))?;
        groups.entry(key).or_default().push((m.clone(), c.clone()));
    }

    let preds: HashMap<String, EmotionDistribution> = load_predictions(&pred_path)?
        .into_iter()
        .map(|r| (r.message_id, r.probs))
        .collect();
    let finance = match &cfg.inputs.finance_dictionary {
        Some(p) => FinanceDictionary::load(p)?,
        None => FinanceDictionary::builtin(),
    };
    ensure_out_dir(cfg)?;
    let stage = Stage::start("aggregate");
    let records = aggregate_all(&groups, &preds, &cfg.aggregate, &finance)?;
    stage.done(records.len());
    header(cfg, "aggregate")
        .with("weighting", format!("{:?}", cfg.aggregate.weighting).to_lowercase())
        .write_file(&cfg.out(FIRM_SESSIONS), |w| Ok(write_firm_sessions(w, &records)?))
}

/// Per-record values for every firm-session column after the key.
fn record_columns(r: &FirmSessionRecord) -> Vec<(String, f64)> {
    let mut out = vec![("n".to_string(), r.n() as f64)];
    for e in Emotion::ALL {
        out.push((e.to_string(), r.share(e)));
    }
    out.push(("valence".into(), r.all.valence));
    out.push(("sentiment".into(), r.all.sentiment));
    for (g, m) in &r.splits {
        out.push((format!("{g}_n"), m.n as f64));
        for e in Emotion::ALL {
            out.push((format!("{g}_{e}"), m.means.get(e)));
        }
        out.push((format!("{g}_valence"), m.valence));
        out.push((format!("{g}_sentiment"), m.sentiment));
    }
    out
}

pub fn panel(cfg: &RunConfig) -> anyhow::Result<()> {
    cfg.require(&["prices"])?;
    let fs_path = upstream(cfg, FIRM_SESSIONS, "aggregate")?;
    let mut panel = Panel::read_csv(cfg.input("prices"))?;
    let stage = Stage::start("returns");
    compute_returns(&mut panel, &cfg.panel.returns)?;
    stage.done(panel.n_rows());

    let records = read_firm_sessions(&fs_path)?;
    let mut columns: BTreeMap<String, HashMap<(String, NaiveDate), f64>> = BTreeMap::new();
    for r in &records {
        let prefix = if r.key.session == cfg.panel.session {
            String::new()
        } else {
            format!("{}_", r.key.session)
        };
        for (name, v) in record_columns(r) {
            columns
                .entry(format!("{prefix}{name}"))
                .or_default()
                .insert((r.key.ticker.clone(), r.key.trade_date), v);
        }
    }
    for (name, values) in &columns {
        if panel.has_column(name) {
            return Err(invalid(format!(
                "inputs.prices: column `{name}` clashes with an emotion column"
            )));
        }
        let matched = panel.join_column(name, values)?;
        if matched < values.len() {
            log::warn!("{name}: {} firm-sessions have no price row", values.len() - matched);
        }
    }
    ensure_out_dir(cfg)?;
    header(cfg, "panel")
        .with("primary_session", cfg.panel.session)
        .write_file(&cfg.out(PANEL), |w| Ok(panel.write_csv(w)?))
}

pub fn regress(cfg: &RunConfig) -> anyhow::Result<()> {
    cfg.require(&["specs"])?;
    let set = SpecSet::load(cfg.input("specs"))?;
    let panel_path = upstream(cfg, PANEL, "panel")?;
    let panel = Panel::read_csv(&panel_path)?;
    set.validate(&panel)?;

    let stage = Stage::start("regress");
    let fitted: Vec<Vec<RegressionResult>> = set
        .models
        .par_iter()
        .map(|m| {
            let out = match &m.fit {
                Fit::Plain => fit_fe_model(&panel, &m.spec).map(|r| vec![r]),
                Fit::Interaction(i) => fit_interaction_model(&panel, &m.spec, i).map(|r| vec![r]),
                Fit::Leads(h) => fit_leads(&panel, &m.spec, h),
            };
            out.with_context(|| format!("spec `{}` (line {})", m.spec.name, m.line))
        })
        .collect::<anyhow::Result<_>>()?;
    let results: Vec<RegressionResult> = fitted.into_iter().flatten().collect();
    stage.done(results.len());
    for r in &results {
        if r.diagnostics.eigen_floor.applied {
            log::warn!(
                "{}: clustered covariance was not PSD; negative eigenvalues floored at 0",
                r.name
            );
        }
    }
    ensure_out_dir(cfg)?;
    let h = header(cfg, "regress");
    if !results.is_empty() {
        h.clone()
            .write_file(&cfg.out(REGRESSIONS_CSV), |w| Ok(write_regression_csv(w, &results)?))?;
        h.clone().write_file(&cfg.out(REGRESSIONS_TXT), |w| {
            Ok(w.write_all(regression_table(&results).as_bytes())?)
        })?;
    }
    if let Some((cols, fe)) = &set.summary {
        let rows = summary_stats(&panel, cols, fe)?;
        h.clone()
            .write_file(&cfg.out(SUMMARY_CSV), |w| Ok(write_summary_csv(w, &rows)?))?;
        h.clone().write_file(&cfg.out(SUMMARY_TXT), |w| {
            Ok(w.write_all(summary_table(&rows).as_bytes())?)
        })?;
    }
    if let Some(cols) = &set.correlation {
        let m = correlation_matrix(&panel, cols)?;
        h.clone()
            .write_file(&cfg.out(CORRELATIONS_CSV), |w| Ok(write_correlation_csv(w, &m)?))?;
        h.write_file(&cfg.out(CORRELATIONS_TXT), |w| {
            Ok(w.write_all(correlation_table(&m).as_bytes())?)
        })?;
    }
    Ok(())
}

pub fn eventstudy(cfg: &RunConfig) -> anyhow::Result<()> {
    let fs_path = upstream(cfg, FIRM_SESSIONS, "aggregate")?;
    let es = &cfg.eventstudy;
    if es.window < 2 {
        return Err(invalid("eventstudy.window: must be at least 2"));
    }
    let emotions: Vec<Emotion> = if es.emotions.is_empty() {
        Emotion::ALL.to_vec()
    } else {
        es.emotions
            .iter()
            .map(|e| e.parse().map_err(|err| invalid(format!("eventstudy.emotions: {err}"))))
            .collect::<anyhow::Result<_>>()?
    };
    let records = read_firm_sessions(&fs_path)?;
    let tickers: Vec<String> = if es.tickers.is_empty() {
        let mut t: Vec<String> = records.iter().map(|r| r.key.ticker.clone()).collect();
        t.sort();
        t.dedup();
        t
    } else {
        es.tickers.clone()
    };
    let mut series = Vec::new();
    for t in &tickers {
        for &e in &emotions {
            let shares = daily_shares(&records, t, e, es.session);
            if shares.is_empty() {
                log::warn!("{t}: no firm-sessions");
                continue;
            }
            series.push(emotion_time_series(t, e, &shares, es.window)?);
        }
    }
    ensure_out_dir(cfg)?;
    header(cfg, "eventstudy")
        .with("window", es.window)
        .with(
            "session",
            es.session.map_or("pooled".to_string(), |s: Session| s.to_string()),
        )
        .write_file(&cfg.out(EVENT_STUDY), |w| Ok(write_event_study(w, &series)?))
}

/// The documented sequence; `regress` only when a spec file is configured.
pub fn run_all(cfg: &RunConfig) -> anyhow::Result<()> {
    preprocess(cfg)?;
    train(cfg)?;
    evaluate(cfg)?;
    predict(cfg)?;
    aggregate(cfg)?;
    panel(cfg)?;
    if cfg.inputs.specs.is_some() {
        regress(cfg)?;
    }
    eventstudy(cfg)
}
