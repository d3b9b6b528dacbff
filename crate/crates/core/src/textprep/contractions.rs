use std::collections::HashMap;
use std::path::Path;
use std::sync::LazyLock;

use regex::Regex;

use crate::error::{Error, Result};

const BUILTIN: &str = include_str!("../../data/contractions.tsv");

static WORD: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"[\w']+").expect("valid word regex"));

/// Contraction → expansion map, keyed by lowercase contraction.
#[derive(Debug, Clone, Default)]
pub struct ContractionTable {
    map: HashMap<String, String>,
}

impl ContractionTable {
    pub fn builtin() -> Self {
        Self::parse(BUILTIN, Path::new("<builtin contractions>")).expect("builtin table is well-formed")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    /// `contraction<TAB>expansion`, one per line.
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let mut map = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (from, to) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(origin, i + 1, "expected contraction<TAB>expansion"))?;
            map.insert(from.trim().to_lowercase(), to.trim().to_lowercase());
        }
        Ok(ContractionTable { map })
    }

    pub fn get(&self, word: &str) -> Option<&str> {
        self.map.get(word).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

/// Replaces every whole-word contraction found in `table`. Expects lowercase input.
pub fn expand_contractions(text: &str, table: &ContractionTable) -> String {
    WORD.replace_all(text, |caps: &regex::Captures<'_>| {
        let w = &caps[0];
        table.get(w).map_or_else(|| w.to_string(), str::to_string)
    })
    .into_owned()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expands_known_forms() {
        let t = ContractionTable::builtin();
        assert!(t.len() >= 100);
        assert_eq!(expand_contractions("i've", &t), "i have");
        assert_eq!(expand_contractions("moon", &t), "moon");
        assert_eq!(expand_contractions("don't can't", &t), "do not cannot");
    }

    #[test]
    fn matches_table_lookup_oracle() {
        let t = ContractionTable::builtin();
        let words = ["won't", "they're", "hodl", "we've", "it's", "y'all"];
        for w in words {
            let expected = t.get(w).unwrap_or(w).to_string();
            assert_eq!(expand_contractions(w, &t), expected);
        }
    }

    #[test]
    fn leaves_punctuation_and_emoticons() {
        let t = ContractionTable::builtin();
        assert_eq!(expand_contractions("sad :'( i'm out!", &t), "sad :'( i am out!");
    }
}
