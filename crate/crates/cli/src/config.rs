use std::fmt;
use std::path::{Path, PathBuf};

use emopipe::aggregate::AggregateConfig;
use emopipe::corpus::Session;
use emopipe::econo::ReturnConfig;
use emopipe::emoclass::TrainConfig;
use serde::Deserialize;
use sha2::{Digest, Sha256};

/// Problems found while checking inputs; reported together, exit code 1.
#[derive(Debug)]
pub struct ValidationError(pub Vec<String>);

impl fmt::Display for ValidationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "invalid configuration:")?;
        for (i, p) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "  - {p}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ValidationError {}

pub fn invalid(msg: impl Into<String>) -> anyhow::Error {
    ValidationError(vec![msg.into()]).into()
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Inputs {
    pub messages: Option<PathBuf>,
    pub prices: Option<PathBuf>,
    pub security_master: Option<PathBuf>,
    pub labeled: Option<PathBuf>,
    /// External prediction file used by `aggregate` instead of the one `predict` writes.
    pub predictions: Option<PathBuf>,
    pub dictionary: Option<PathBuf>,
    pub lexicon: Option<PathBuf>,
    pub contractions: Option<PathBuf>,
    pub standard_words: Option<PathBuf>,
    pub finance_dictionary: Option<PathBuf>,
    pub companies: Option<PathBuf>,
    pub specs: Option<PathBuf>,
}

impl Inputs {
    fn entries(&self) -> [(&'static str, &Option<PathBuf>); 12] {
        [
            ("messages", &self.messages),
            ("prices", &self.prices),
            ("security_master", &self.security_master),
            ("labeled", &self.labeled),
            ("predictions", &self.predictions),
            ("dictionary", &self.dictionary),
            ("lexicon", &self.lexicon),
            ("contractions", &self.contractions),
            ("standard_words", &self.standard_words),
            ("finance_dictionary", &self.finance_dictionary),
            ("companies", &self.companies),
            ("specs", &self.specs),
        ]
    }

    fn resolve(&mut self, base: &Path) {
        for p in [
            &mut self.messages,
            &mut self.prices,
            &mut self.security_master,
            &mut self.labeled,
            &mut self.predictions,
            &mut self.dictionary,
            &mut self.lexicon,
            &mut self.contractions,
            &mut self.standard_words,
            &mut self.finance_dictionary,
            &mut self.companies,
            &mut self.specs,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusSection {
    pub format: Option<String>,
    pub automated_threshold: usize,
    pub min_activity: usize,
}

impl Default for CorpusSection {
    fn default() -> Self {
        CorpusSection {
            format: None,
            automated_threshold: emopipe::corpus::AUTOMATED_THRESHOLD,
            min_activity: emopipe::corpus::MIN_ACTIVITY,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TextprepSection {
    pub max_edit_distance: usize,
    pub min_correction_len: usize,
}

impl Default for TextprepSection {
    fn default() -> Self {
        TextprepSection {
            max_edit_distance: emopipe::textprep::DEFAULT_MAX_EDIT_DISTANCE,
            min_correction_len: 4,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluateSection {
    pub folds: usize,
}

impl Default for EvaluateSection {
    fn default() -> Self {
        EvaluateSection { folds: 5 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PanelSection {
    /// Session whose aggregates become the unprefixed emotion columns.
    pub session: Session,
    pub returns: ReturnConfig,
}

impl Default for PanelSection {
    fn default() -> Self {
        PanelSection {
            session: Session::Premarket,
            returns: ReturnConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EventStudySection {
    /// Defaults to every ticker in the aggregate file.
    pub tickers: Vec<String>,
    /// Defaults to all seven emotions.
    pub emotions: Vec<String>,
    pub window: usize,
    /// Pool both sessions when absent.
    pub session: Option<Session>,
}

impl Default for EventStudySection {
    fn default() -> Self {
        EventStudySection {
            tickers: Vec::new(),
            emotions: Vec::new(),
            window: 90,
            session: None,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    seed: Option<u64>,
    out_dir: Option<PathBuf>,
    #[serde(default)]
    inputs: Inputs,
    #[serde(default)]
    corpus: CorpusSection,
    #[serde(default)]
    textprep: TextprepSection,
    #[serde(default)]
    model: TrainConfig,
    #[serde(default)]
    evaluate: EvaluateSection,
    #[serde(default)]
    aggregate: AggregateConfig,
    #[serde(default)]
    panel: PanelSection,
    #[serde(default)]
    eventstudy: EventStudySection,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub seed: u64,
    pub out_dir: PathBuf,
    pub inputs: Inputs,
    pub corpus: CorpusSection,
    pub textprep: TextprepSection,
    pub model: TrainConfig,
    pub evaluate: EvaluateSection,
    pub aggregate: AggregateConfig,
    pub panel: PanelSection,
    pub eventstudy: EventStudySection,
    pub strict: bool,
    /// Hex SHA-256 of the config file bytes.
    pub config_hash: String,
}

pub const DEFAULT_SEED: u64 = 42;

pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub strict: bool,
}

impl RunConfig {
    /// Parses the config; relative paths are taken from the config file's directory.
    pub fn load(path: &Path, overrides: &Overrides) -> anyhow::Result<RunConfig> {
        let bytes = std::fs::read(path).map_err(|e| invalid(format!("cannot read config {}: {e}", path.display())))?;
        let text = String::from_utf8(bytes.clone()).map_err(|_| invalid(format!("{} is not UTF-8", path.display())))?;
        Self::parse(&text, path, &bytes, overrides)
    }

    fn parse(text: &str, path: &Path, bytes: &[u8], overrides: &Overrides) -> anyhow::Result<RunConfig> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| {
            let line = e.span().map(|s| line_of(text, s.start));
            let msg = e.message().to_string();
            match line {
                Some(l) => invalid(format!("{}:{l}: {msg}", path.display())),
                None => invalid(format!("{}: {msg}", path.display())),
            }
        })?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let mut inputs = raw.inputs;
        inputs.resolve(&base);
        let out_dir = match (&overrides.out, raw.out_dir) {
            (Some(o), _) => o.clone(),
            (None, Some(o)) if o.is_relative() => base.join(o),
            (None, Some(o)) => o,
            (None, None) => base.join("out"),
        };
        let seed = overrides.seed.or(raw.seed).unwrap_or(DEFAULT_SEED);
        let mut model = raw.model;
        model.seed = seed;
        let cfg = RunConfig {
            seed,
            out_dir,
            inputs,
            corpus: raw.corpus,
            textprep: raw.textprep,
            model,
            evaluate: raw.evaluate,
            aggregate: raw.aggregate,
            panel: raw.panel,
            eventstudy: raw.eventstudy,
            strict: overrides.strict,
            config_hash: hex(&Sha256::digest(bytes)),
        };
        cfg.validate_paths()?;
        Ok(cfg)
    }

    /// Every configured input must exist.
    fn validate_paths(&self) -> anyhow::Result<()> {
        let problems: Vec<String> = self
            .inputs
            .entries()
            .iter()
            .filter_map(|(key, p)| {
                let p = p.as_ref()?;
                (!p.is_file()).then(|| format!("inputs.{key}: file not found: {}", p.display()))
            })
            .collect();
        if problems.is_empty() {
            Ok(())
        } else {
            Err(ValidationError(problems).into())
        }
    }

    /// The listed input keys must be set.
    pub fn require(&self, keys: &[&str]) -> anyhow::Result<()> {
        let entries = self.inputs.entries();
        let problems: Vec<String> = keys
            .iter()
            .filter(|k| entries.iter().any(|(name, p)| name == *k && p.is_none()))
            .map(|k| format!("inputs.{k}: required but not set"))
            .collect();
        if problems.is_empty() {
            Ok(())
        } else {
            Err(ValidationError(problems).into())
        }
    }

    pub fn input(&self, key: &str) -> &Path {
        self.inputs
            .entries()
            .iter()
            .find(|(name, _)| *name == key)
            .and_then(|(_, p)| p.as_deref())
            .expect("checked by require")
    }

    pub fn out(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }
}

pub fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
