//! Emoji/emoticon-aware tokenizer.
//!
//! Lexicon entries are matched greedily (longest first) and emitted as single
//! tokens, even when glued to surrounding words. An entry that begins with an
//! alphanumeric character only matches at a word boundary, and one that ends
//! with an alphanumeric character only matches when not followed by another
//! alphanumeric, so `xd` fires in `lol xd` but not inside `boxdrop`.

use std::collections::HashSet;
use std::path::Path;

use crate::error::{Error, Result};

use super::PLACEHOLDERS;

const BUILTIN: &str = include_str!("../../data/emo_lexicon.txt");

#[derive(Debug, Clone, Default)]
pub struct EmoLexicon {
    entries: HashSet<String>,
    max_chars: usize,
}

impl EmoLexicon {
    pub fn builtin() -> Self {
        Self::from_lines(BUILTIN.lines())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::from_lines(text.lines()))
    }

    /// Entries are lowercased; blank lines are ignored.
    pub fn from_lines<'a>(lines: impl IntoIterator<Item = &'a str>) -> Self {
        let mut lex = EmoLexicon::default();
        for line in lines {
            lex.insert(line.trim_end_matches(['\r', '\n']));
        }
        lex
    }

    pub fn insert(&mut self, token: &str) {
        let token = token.trim();
        if token.is_empty() {
            return;
        }
        let token = token.to_lowercase();
        self.max_chars = self.max_chars.max(token.chars().count());
        self.entries.insert(token);
    }

    pub fn contains(&self, token: &str) -> bool {
        self.entries.contains(token)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(String::as_str)
    }

    /// Length in chars of the longest entry matching at the start of `chars`.
    fn longest_match(&self, chars: &[char], at_boundary: bool) -> Option<usize> {
        if self.entries.is_empty() {
            return None;
        }
        let first = chars[0];
        if first.is_alphanumeric() && !at_boundary {
            return None;
        }
        let mut buf = String::with_capacity(self.max_chars * 4);
        let upto = self.max_chars.min(chars.len());
        let mut best = None;
        for (len, &c) in chars[..upto].iter().enumerate() {
            buf.push(c);
            let len = len + 1;
            if !self.entries.contains(&buf) {
                continue;
            }
            let glued = c.is_alphanumeric() && chars.get(len).is_some_and(|n| n.is_alphanumeric());
            if !glued {
                best = Some(len);
            }
        }
        best
    }
}

fn is_joiner(c: char) -> bool {
    matches!(c, '\u{200d}' | '\u{fe0e}' | '\u{fe0f}' | '\u{20e3}')
}

/// Non-ASCII punctuation that separates words rather than forming tokens.
fn is_unicode_punct(c: char) -> bool {
    matches!(c as u32, 0x00a0..=0x00bf | 0x2000..=0x206f | 0x3000..=0x303f | 0xff01..=0xff0f)
}

/// Splits text into word tokens, lexicon tokens and placeholder tags.
/// ASCII punctuation outside lexicon entries separates tokens and is dropped;
/// other non-alphanumeric symbols (unlisted emoji) become single-char tokens.
pub fn lex(text: &str, lexicon: &EmoLexicon) -> Vec<String> {
    let chars: Vec<char> = text.chars().collect();
    let mut tokens = Vec::new();
    let mut word = String::new();
    let flush = |word: &mut String, tokens: &mut Vec<String>| {
        if !word.is_empty() {
            tokens.push(std::mem::take(word));
        }
    };

    let mut i = 0;
    'outer: while i < chars.len() {
        let c = chars[i];
        if c == '<' {
            for p in PLACEHOLDERS {
                let n = p.chars().count();
                if chars.len() >= i + n && chars[i..i + n].iter().copied().eq(p.chars()) {
                    flush(&mut word, &mut tokens);
                    tokens.push(p.to_string());
                    i += n;
                    continue 'outer;
                }
            }
        }
        if let Some(n) = lexicon.longest_match(&chars[i..], word.is_empty()) {
            flush(&mut word, &mut tokens);
            tokens.push(chars[i..i + n].iter().collect());
            i += n;
            continue;
        }

        let prev = word.chars().last();
        let next = chars.get(i + 1).copied();
        let in_word = if c.is_alphanumeric() || c == '_' {
            true
        } else {
            match c {
                // cashtag prefix
                '$' => word.is_empty() && next.is_some_and(|n| n.is_alphanumeric()),
                '\'' => prev.is_some_and(char::is_alphabetic) && next.is_some_and(char::is_alphabetic),
                '.' | ',' => prev.is_some_and(|p| p.is_ascii_digit()) && next.is_some_and(|n| n.is_ascii_digit()),
                _ => false,
            }
        };
        if in_word {
            word.push(c);
        } else {
            flush(&mut word, &mut tokens);
            if !c.is_whitespace() && !c.is_ascii() && !is_joiner(c) && !is_unicode_punct(c) {
                tokens.push(c.to_string());
            }
        }
        i += 1;
    }
    flush(&mut word, &mut tokens);
    tokens
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lexicon(entries: &[&str]) -> EmoLexicon {
        EmoLexicon::from_lines(entries.iter().copied())
    }

    #[test]
    fn glued_emoticon() {
        let lx = lexicon(&[":)", ":("]);
        assert_eq!(lex("nice:)", &lx), ["nice", ":)"]);
    }

    #[test]
    fn sentence_with_emoticon() {
        let lx = EmoLexicon::builtin();
        assert_eq!(lex("not feeling it :)", &lx), ["not", "feeling", "it", ":)"]);
    }

    #[test]
    fn longest_match_wins() {
        // exhaustive over both insertion orders of the two entries
        for entries in [[":)", ":))"], [":))", ":)"]] {
            let lx = lexicon(&entries);
            assert_eq!(lex(":))", &lx), [":))"]);
            assert_eq!(lex(":)", &lx), [":)"]);
            assert_eq!(lex(":)))", &lx), [":))"]);
        }
    }

    #[test]
    fn alphanumeric_entries_need_boundaries() {
        let lx = lexicon(&["xd", ":d", "<3"]);
        assert_eq!(lex("lol xd", &lx), ["lol", "xd"]);
        assert_eq!(lex("boxdrop", &lx), ["boxdrop"]);
        assert_eq!(lex("xdate", &lx), ["xdate"]);
        assert_eq!(lex(":dude", &lx), ["dude"]);
        assert_eq!(lex("great:d", &lx), ["great", ":d"]);
        assert_eq!(lex("i <3 it", &lx), ["i", "<3", "it"]);
    }

    #[test]
    fn words_numbers_cashtags() {
        let lx = EmoLexicon::default();
        assert_eq!(
            lex("$amzn up 3.5% to 1,000 isn't it? wow!!", &lx),
            ["$amzn", "up", "3.5", "to", "1,000", "isn't", "it", "wow"]
        );
    }

    #[test]
    fn placeholders_are_atomic() {
        let lx = lexicon(&["<3"]);
        assert_eq!(
            lex("<ticker> <number><unknown> <3", &lx),
            ["<ticker>", "<number>", "<unknown>", "<3"]
        );
    }

    #[test]
    fn emoji_sequences() {
        let lx = EmoLexicon::builtin();
        assert!(lx.len() > 1000);
        assert_eq!(lex("moon🚀🚀", &lx), ["moon", "🚀", "🚀"]);
        assert_eq!(lex("ok👍🏽", &lx), ["ok", "👍🏽"]);
        assert_eq!(lex("hmm ❤️ yes", &lx), ["hmm", "❤️", "yes"]);
    }

    #[test]
    fn unlisted_symbols_become_tokens() {
        let lx = EmoLexicon::default();
        assert_eq!(lex("buy ★ now “quoted”", &lx), ["buy", "★", "now", "quoted"]);
    }
}
