//! Text normalization: artifact stripping, lowercasing, contraction
//! expansion, emo-aware lexing, spell correction/segmentation and placeholder
//! substitution, in that order.

mod artifacts;
mod contractions;
mod lexer;
mod symspell;

use std::collections::{HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{CleanedText, RawMessage};
use crate::error::{Error, Result};

pub use artifacts::{is_repost, strip_artifacts};
pub use contractions::{expand_contractions, ContractionTable};
pub use lexer::{lex, EmoLexicon};
pub use symspell::{deletion_variants, osa_distance, FrequencyDictionary, Suggestion, DEFAULT_MAX_EDIT_DISTANCE};

pub const NUMBER: &str = "<number>";
pub const TICKER: &str = "<ticker>";
pub const COMPANY: &str = "<company>";
pub const USER: &str = "<user>";
pub const UNKNOWN: &str = "<unknown>";
pub const PLACEHOLDERS: [&str; 5] = [NUMBER, TICKER, COMPANY, USER, UNKNOWN];

const STANDARD_WORDS: &str = include_str!("../../data/english_words.txt");

pub fn is_placeholder(token: &str) -> bool {
    PLACEHOLDERS.contains(&token)
}

/// Digits with optional `.`/`,` separators, optionally `$`-prefixed.
pub fn is_numeric(token: &str) -> bool {
    let t = token.strip_prefix('$').unwrap_or(token);
    t.starts_with(|c: char| c.is_ascii_digit()) && t.chars().all(|c| c.is_ascii_digit() || c == '.' || c == ',')
}

fn is_cashtag(token: &str) -> bool {
    token
        .strip_prefix('$')
        .is_some_and(|rest| rest.starts_with(|c: char| c.is_alphabetic()) && rest.chars().all(char::is_alphanumeric))
}

/// The standard English word list shipped with the crate.
pub fn standard_words() -> HashSet<String> {
    STANDARD_WORDS
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect()
}

/// Reads a one-entry-per-line list, lowercased.
pub fn load_word_list(path: &Path) -> Result<HashSet<String>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text
        .lines()
        .map(|l| l.trim().to_lowercase())
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .collect())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleanMessage {
    pub message_id: String,
    pub tokens: Vec<String>,
    pub has_hyperlink: bool,
    pub is_retweet: bool,
    pub normalized_text: String,
}

impl CleanedText for CleanMessage {
    fn cleaned_text(&self) -> &str {
        &self.normalized_text
    }
}

/// Lowercase name sets used for placeholder substitution.
#[derive(Debug, Clone, Default)]
pub struct PlaceholderSets {
    pub tickers: HashSet<String>,
    pub companies: HashSet<String>,
    pub user_handles: HashSet<String>,
}

/// Immutable resources shared by every `normalize` call.
#[derive(Debug, Clone)]
pub struct Resources {
    pub dictionary: FrequencyDictionary,
    pub lexicon: EmoLexicon,
    pub contractions: ContractionTable,
    pub names: PlaceholderSets,
    /// Tokens shorter than this are never spell-corrected.
    pub min_correction_len: usize,
}

impl Resources {
    pub fn new(dictionary: FrequencyDictionary) -> Self {
        Resources {
            dictionary,
            lexicon: EmoLexicon::builtin(),
            contractions: ContractionTable::builtin(),
            names: PlaceholderSets::default(),
            min_correction_len: 4,
        }
    }

    pub fn builtin() -> Self {
        Self::new(FrequencyDictionary::builtin(DEFAULT_MAX_EDIT_DISTANCE))
    }

    fn is_protected(&self, token: &str) -> bool {
        is_placeholder(token)
            || self.lexicon.contains(token)
            || token.starts_with('$')
            || is_numeric(token)
            || self.names.user_handles.contains(token)
            || self.names.companies.contains(token)
            || self.names.tickers.contains(token)
    }
}

/// Maps numbers, tickers, company names and user handles to placeholder tags;
/// anything else not in the dictionary or lexicon becomes `<unknown>`.
pub fn substitute_placeholders(
    tokens: &[String],
    names: &PlaceholderSets,
    dictionary: &FrequencyDictionary,
    lexicon: &EmoLexicon,
) -> Vec<String> {
    tokens
        .iter()
        .map(|t| {
            let t = t.as_str();
            let out = if is_placeholder(t) || lexicon.contains(t) {
                t
            } else if is_numeric(t) {
                NUMBER
            } else if is_cashtag(t) {
                TICKER
            } else if names.user_handles.contains(t) {
                USER
            } else if names.companies.contains(t) {
                COMPANY
            } else if names.tickers.contains(t) && !dictionary.contains(t) {
                TICKER
            } else if dictionary.contains(t) {
                t
            } else {
                UNKNOWN
            };
            out.to_string()
        })
        .collect()
}

/// Segments or spell-corrects one lexed token. Known, protected and
/// non-alphabetic tokens come back unchanged.
pub fn repair_token(token: &str, res: &Resources) -> Vec<String> {
    if res.dictionary.contains(token) || res.is_protected(token) || !token.chars().all(char::is_alphabetic) {
        return vec![token.to_string()];
    }
    let pieces = res.dictionary.segment_word(token);
    if pieces.len() > 1 {
        pieces
    } else if token.chars().count() >= res.min_correction_len {
        vec![res.dictionary.correct_spelling(token)]
    } else {
        vec![token.to_string()]
    }
}

/// Full normalization of one post.
pub fn normalize(text: &str, res: &Resources) -> CleanMessage {
    let is_retweet = is_repost(text);
    let (stripped, has_hyperlink) = strip_artifacts(text);
    let lowered = stripped.to_lowercase().replace('\u{2019}', "'");
    let expanded = expand_contractions(&lowered, &res.contractions);
    let lexed = lex(&expanded, &res.lexicon);

    let mut repaired = Vec::with_capacity(lexed.len());
    for token in lexed {
        repaired.extend(repair_token(&token, res));
    }

    let tokens = substitute_placeholders(&repaired, &res.names, &res.dictionary, &res.lexicon);
    let normalized_text = tokens.join(" ");
    CleanMessage {
        message_id: String::new(),
        tokens,
        has_hyperlink,
        is_retweet,
        normalized_text,
    }
}

pub fn normalize_message(msg: &RawMessage, res: &Resources) -> CleanMessage {
    CleanMessage {
        message_id: msg.message_id.clone(),
        ..normalize(&msg.body, res)
    }
}

/// Token sets removed before counting a corpus vocabulary.
#[derive(Debug, Clone, Default)]
pub struct Exclusions {
    /// Lowercase tickers, without `$`.
    pub tickers: HashSet<String>,
    pub lexicon: EmoLexicon,
    pub standard_words: HashSet<String>,
}

/// Counts corpus tokens that are not tickers, emo tokens, placeholders,
/// numbers or standard English words.
pub fn build_frequency_dictionary(
    corpus: &[Vec<String>],
    exclusions: &Exclusions,
    max_edit_distance: usize,
) -> Result<FrequencyDictionary> {
    let mut counts: HashMap<String, u64> = HashMap::new();
    for doc in corpus {
        for token in doc {
            let t = token.to_lowercase();
            let bare = t.strip_prefix('$').unwrap_or(&t);
            if t.starts_with('$')
                || is_placeholder(&t)
                || is_numeric(&t)
                || exclusions.tickers.contains(bare)
                || exclusions.lexicon.contains(&t)
                || exclusions.standard_words.contains(&t)
                || !t.chars().any(char::is_alphabetic)
            {
                continue;
            }
            *counts.entry(t).or_default() += 1;
        }
    }
    FrequencyDictionary::new(counts, max_edit_distance)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_string).collect()
    }

    #[test]
    fn vocabulary_counts() {
        let d = build_frequency_dictionary(&[toks("hold hold buy")], &Exclusions::default(), 2).unwrap();
        assert_eq!(d.count("hold"), Some(2));
        assert_eq!(d.count("buy"), Some(1));
        assert_eq!(d.len(), 2);
    }

    #[test]
    fn vocabulary_exclusions() {
        let ex = Exclusions {
            tickers: ["tsla".to_string()].into(),
            lexicon: EmoLexicon::from_lines([":)"]),
            standard_words: ["the".to_string()].into(),
        };
        let d = build_frequency_dictionary(&[toks("$TSLA tsla the :) 125 hodl")], &ex, 2).unwrap();
        assert!(!d.contains("tsla") && !d.contains("$tsla"));
        assert!(!d.contains("the") && !d.contains(":)") && !d.contains("125"));
        assert_eq!(d.words(), ["hodl"]);
        assert!(matches!(
            build_frequency_dictionary(&[toks("the $TSLA")], &ex, 2),
            Err(Error::EmptyVocabulary)
        ));
    }

    #[test]
    fn placeholder_rules() {
        let dict = FrequencyDictionary::new([("moon".to_string(), 10), ("apple".to_string(), 5)], 2).unwrap();
        let names = PlaceholderSets {
            tickers: ["amzn".to_string()].into(),
            companies: ["apple".to_string()].into(),
            user_handles: ["bob".to_string()].into(),
        };
        let out = substitute_placeholders(
            &toks("$amzn 125 1,000 3.5 qqxzw moon apple bob amzn :) <ticker>"),
            &names,
            &dict,
            &EmoLexicon::from_lines([":)"]),
        );
        assert_eq!(
            out,
            toks("<ticker> <number> <number> <number> <unknown> moon <company> <user> <ticker> :) <ticker>")
        );
    }

    #[test]
    fn numeric_detection() {
        assert!(is_numeric("125") && is_numeric("1,000") && is_numeric("3.5") && is_numeric("$1.45"));
        assert!(!is_numeric("q1") && !is_numeric("$amzn") && !is_numeric(""));
    }

    #[test]
    fn end_to_end_example() {
        let res = Resources::builtin();
        let c = normalize("I've $AMZN :)", &res);
        assert_eq!(c.tokens, ["i", "have", "<ticker>", ":)"]);
        assert_eq!(c.normalized_text, "i have <ticker> :)");
    }

    #[test]
    fn empty_text() {
        let c = normalize("", &Resources::builtin());
        assert!(c.tokens.is_empty());
        assert_eq!(c.normalized_text, "");
    }

    #[test]
    fn flags() {
        let res = Resources::builtin();
        let c = normalize("RT @bob: earnings beat http://t.co/x", &res);
        assert!(c.is_retweet && c.has_hyperlink);
        let c = normalize("earnings beat", &res);
        assert!(!c.is_retweet && !c.has_hyperlink);
    }

    #[test]
    fn segmentation_and_correction_in_pipeline() {
        let res = Resources::builtin();
        assert_eq!(normalize("ilike this", &res).tokens, ["i", "like", "this"]);
        assert_eq!(normalize("hodl", &res).tokens, ["hold"]);
        assert_eq!(normalize("zzqxv", &res).tokens, ["<unknown>"]);
    }

    #[test]
    fn idempotent_on_examples() {
        let res = Resources::builtin();
        for text in [
            "I've $AMZN :) http://x.co",
            "not feeling it :(",
            "ilike $TSLA up 3.5% 🚀🚀 @bob #moon",
            "Been a long time since i felt so awful :(.",
            "WTf is going on rn??",
        ] {
            let once = normalize(text, &res);
            let twice = normalize(&once.normalized_text, &res);
            assert_eq!(once.tokens, twice.tokens, "{text}");
        }
    }
}
