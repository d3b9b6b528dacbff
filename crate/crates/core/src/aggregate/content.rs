use std::collections::HashSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::textprep::{is_numeric, CleanMessage, NUMBER};

const BUILTIN: &str = include_str!("../../data/finance_dictionary.txt");

/// Finance terms and multi-word phrases, matched against normalized tokens.
#[derive(Debug, Clone, Default)]
pub struct FinanceDictionary {
    terms: HashSet<String>,
    phrases: Vec<Vec<String>>,
}

fn entry_tokens(entry: &str) -> Vec<String> {
    entry
        .split(|c: char| c.is_whitespace() || c == '-' || c == '/')
        .filter(|p| !p.is_empty())
        .map(|p| {
            if is_numeric(p) {
                NUMBER.to_string()
            } else {
                p.to_string()
            }
        })
        .collect()
}

impl FinanceDictionary {
    pub fn builtin() -> Self {
        Self::from_lines(BUILTIN.lines())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::from_lines(text.lines()))
    }

    /// One lowercase term or phrase per line; `#` starts a comment line.
    pub fn from_lines<'a>(lines: impl IntoIterator<Item = &'a str>) -> Self {
        let mut dict = FinanceDictionary::default();
        for line in lines {
            let line = line.trim().to_lowercase();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let toks = entry_tokens(&line);
            match toks.len() {
                0 => {}
                1 => {
                    dict.terms.insert(toks.into_iter().next().expect("one token"));
                }
                _ => dict.phrases.push(toks),
            }
        }
        dict
    }

    pub fn len(&self) -> usize {
        self.terms.len() + self.phrases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn matches(&self, tokens: &[String]) -> bool {
        tokens.iter().any(|t| self.terms.contains(t))
            || self
                .phrases
                .iter()
                .any(|p| tokens.windows(p.len()).any(|w| w == p.as_slice()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChatType {
    Finance,
    Chat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InfoType {
    Original,
    Disseminating,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ContentTags {
    pub chat_type: ChatType,
    pub info_type: InfoType,
}

pub fn tag_content(clean: &CleanMessage, dict: &FinanceDictionary) -> ContentTags {
    ContentTags {
        chat_type: if dict.matches(&clean.tokens) {
            ChatType::Finance
        } else {
            ChatType::Chat
        },
        info_type: if clean.is_retweet || clean.has_hyperlink {
            InfoType::Disseminating
        } else {
            InfoType::Original
        },
    }
}

/// Sub-samples reported alongside the full firm-session aggregate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ContentGroup {
    Chat,
    Finance,
    Original,
    Disseminating,
}

impl ContentGroup {
    pub const ALL: [ContentGroup; 4] = [
        ContentGroup::Chat,
        ContentGroup::Finance,
        ContentGroup::Original,
        ContentGroup::Disseminating,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ContentGroup::Chat => "chat",
            ContentGroup::Finance => "finance",
            ContentGroup::Original => "original",
            ContentGroup::Disseminating => "disseminating",
        }
    }

    pub fn contains(self, tags: &ContentTags) -> bool {
        match self {
            ContentGroup::Chat => tags.chat_type == ChatType::Chat,
            ContentGroup::Finance => tags.chat_type == ChatType::Finance,
            ContentGroup::Original => tags.info_type == InfoType::Original,
            ContentGroup::Disseminating => tags.info_type == InfoType::Disseminating,
        }
    }
}

impl fmt::Display for ContentGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn clean(tokens: &str, retweet: bool, link: bool) -> CleanMessage {
        CleanMessage {
            message_id: "m".into(),
            tokens: tokens.split_whitespace().map(str::to_string).collect(),
            has_hyperlink: link,
            is_retweet: retweet,
            normalized_text: tokens.into(),
        }
    }

    #[test]
    fn finance_terms_and_phrases() {
        let d = FinanceDictionary::builtin();
        assert!(d.len() > 100);
        assert_eq!(
            tag_content(&clean("great earnings beat", false, false), &d).chat_type,
            ChatType::Finance
        );
        assert_eq!(tag_content(&clean(":) :)", false, false), &d).chat_type, ChatType::Chat);
        assert_eq!(
            tag_content(&clean("nice price target raise", false, false), &d).chat_type,
            ChatType::Finance
        );
        assert_eq!(
            tag_content(&clean("the weather is nice", false, false), &d).chat_type,
            ChatType::Chat
        );
        assert_eq!(
            tag_content(&clean("read the <number> k", false, false), &d).chat_type,
            ChatType::Finance
        );
    }

    #[test]
    fn information_type() {
        let d = FinanceDictionary::default();
        assert_eq!(tag_content(&clean("x", false, false), &d).info_type, InfoType::Original);
        assert_eq!(
            tag_content(&clean("x", false, true), &d).info_type,
            InfoType::Disseminating
        );
        assert_eq!(
            tag_content(&clean("x", true, false), &d).info_type,
            InfoType::Disseminating
        );
    }

    #[test]
    fn each_message_lands_in_one_group_per_dimension() {
        let d = FinanceDictionary::builtin();
        for (t, r, l) in [("earnings", true, false), (":)", false, false), ("ipo", false, true)] {
            let tags = tag_content(&clean(t, r, l), &d);
            let hits: Vec<_> = ContentGroup::ALL.iter().filter(|g| g.contains(&tags)).collect();
            assert_eq!(hits.len(), 2);
            assert!(ContentGroup::Chat.contains(&tags) ^ ContentGroup::Finance.contains(&tags));
            assert!(ContentGroup::Original.contains(&tags) ^ ContentGroup::Disseminating.contains(&tags));
        }
    }
}
