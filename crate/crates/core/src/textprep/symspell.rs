//! Symmetric-deletion spell correction and word segmentation.
//!
//! Every dictionary word contributes all of its deletion variants up to
//! `max_edit_distance`. A query generates its own deletion variants; any word
//! sharing a variant is a candidate, and candidates are verified with the
//! optimal-string-alignment distance. Two strings within distance `d` always
//! share such a variant, so the candidate set is complete.

use std::cmp::Ordering;
use std::collections::hash_map::DefaultHasher;
use std::collections::{HashMap, HashSet};
use std::hash::{Hash, Hasher};
use std::path::Path;

use crate::error::{Error, Result};

const BUILTIN: &str = include_str!("../../data/frequency_dictionary_en.tsv");

pub const DEFAULT_MAX_EDIT_DISTANCE: usize = 2;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Suggestion {
    pub term: String,
    pub distance: usize,
    pub count: u64,
}

/// Word counts plus a hashed deletion-variant index.
#[derive(Debug, Clone)]
pub struct FrequencyDictionary {
    words: Vec<String>,
    counts: HashMap<String, u64>,
    max_edit_distance: usize,
    // (hash of deletion variant, word index), sorted
    index: Vec<(u64, u32)>,
    log_total: f64,
    max_word_chars: usize,
}

fn variant_hash(s: &str) -> u64 {
    let mut h = DefaultHasher::new();
    s.hash(&mut h);
    h.finish()
}

/// Hashes every deletion variant (with repeats) of `chars`, removing
/// positions in increasing order starting at `from`.
fn push_deletions(
    chars: &[char],
    from: usize,
    budget: usize,
    removed: &mut Vec<usize>,
    buf: &mut String,
    emit: &mut impl FnMut(u64),
) {
    buf.clear();
    let mut r = removed.iter().peekable();
    for (i, &c) in chars.iter().enumerate() {
        if r.peek() == Some(&&i) {
            r.next();
        } else {
            buf.push(c);
        }
    }
    emit(variant_hash(buf));
    if budget == 0 || chars.len() - removed.len() <= 1 {
        return;
    }
    for pos in from..chars.len() {
        removed.push(pos);
        push_deletions(chars, pos + 1, budget - 1, removed, buf, emit);
        removed.pop();
    }
}

/// All strings obtainable from `word` by deleting up to `max_deletes` chars,
/// including `word` itself.
pub fn deletion_variants(word: &str, max_deletes: usize) -> HashSet<String> {
    let mut out = HashSet::new();
    out.insert(word.to_string());
    let mut frontier = vec![word.chars().collect::<Vec<char>>()];
    for _ in 0..max_deletes {
        let mut next = Vec::new();
        for chars in &frontier {
            if chars.len() <= 1 {
                continue;
            }
            for i in 0..chars.len() {
                let mut v = chars.clone();
                v.remove(i);
                if out.insert(v.iter().collect()) {
                    next.push(v);
                }
            }
        }
        frontier = next;
    }
    out
}

/// Optimal string alignment distance (Levenshtein plus adjacent transposition).
pub fn osa_distance(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let (n, m) = (a.len(), b.len());
    let mut d = vec![vec![0usize; m + 1]; n + 1];
    for (i, row) in d.iter_mut().enumerate() {
        row[0] = i;
    }
    for (j, cell) in d[0].iter_mut().enumerate() {
        *cell = j;
    }
    for i in 1..=n {
        for j in 1..=m {
            let cost = usize::from(a[i - 1] != b[j - 1]);
            let mut v = (d[i - 1][j] + 1).min(d[i][j - 1] + 1).min(d[i - 1][j - 1] + cost);
            if i > 1 && j > 1 && a[i - 1] == b[j - 2] && a[i - 2] == b[j - 1] {
                v = v.min(d[i - 2][j - 2] + 1);
            }
            d[i][j] = v;
        }
    }
    d[n][m]
}

impl FrequencyDictionary {
    pub fn new(entries: impl IntoIterator<Item = (String, u64)>, max_edit_distance: usize) -> Result<Self> {
        let mut counts: HashMap<String, u64> = HashMap::new();
        for (w, c) in entries {
            if c == 0 || w.is_empty() {
                continue;
            }
            *counts.entry(w).or_default() += c;
        }
        if counts.is_empty() {
            return Err(Error::EmptyVocabulary);
        }
        let mut words: Vec<String> = counts.keys().cloned().collect();
        words.sort();
        let mut index = Vec::new();
        let mut buf = String::new();
        for (i, w) in words.iter().enumerate() {
            let chars: Vec<char> = w.chars().collect();
            let mut removed = Vec::with_capacity(max_edit_distance);
            push_deletions(&chars, 0, max_edit_distance, &mut removed, &mut buf, &mut |h| {
                index.push((h, i as u32))
            });
        }
        index.sort_unstable();
        index.dedup();
        let total: f64 = counts.values().map(|&c| c as f64).sum();
        let max_word_chars = words.iter().map(|w| w.chars().count()).max().unwrap_or(0);
        Ok(FrequencyDictionary {
            words,
            counts,
            max_edit_distance,
            index,
            log_total: total.ln(),
            max_word_chars,
        })
    }

    /// Shipped English frequency list.
    pub fn builtin(max_edit_distance: usize) -> Self {
        Self::parse(BUILTIN, Path::new("<builtin dictionary>"), max_edit_distance)
            .expect("builtin dictionary is well-formed")
    }

    pub fn load(path: &Path, max_edit_distance: usize) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path, max_edit_distance)
    }

    /// `word<TAB>count` per line.
    pub fn parse(text: &str, origin: &Path, max_edit_distance: usize) -> Result<Self> {
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split('\t');
            let (Some(word), Some(count), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(Error::parse(origin, i + 1, "expected word<TAB>count"));
            };
            let count: u64 = count
                .trim()
                .parse()
                .map_err(|_| Error::parse(origin, i + 1, format!("bad count `{count}`")))?;
            if count == 0 {
                return Err(Error::parse(origin, i + 1, "counts must be at least 1"));
            }
            entries.push((word.trim().to_lowercase(), count));
        }
        Self::new(entries, max_edit_distance)
    }

    pub fn max_edit_distance(&self) -> usize {
        self.max_edit_distance
    }

    pub fn contains(&self, word: &str) -> bool {
        self.counts.contains_key(word)
    }

    pub fn count(&self, word: &str) -> Option<u64> {
        self.counts.get(word).copied()
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Words in lexicographic order.
    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u64)> {
        self.words.iter().map(|w| (w.as_str(), self.counts[w]))
    }

    fn indexed(&self, variant: &str) -> impl Iterator<Item = u32> + '_ {
        let h = variant_hash(variant);
        let start = self.index.partition_point(|&(k, _)| k < h);
        self.index[start..]
            .iter()
            .take_while(move |&&(k, _)| k == h)
            .map(|&(_, i)| i)
    }

    /// Dictionary words that have `variant` among their deletion variants.
    pub fn words_with_variant(&self, variant: &str) -> Vec<&str> {
        let mut out: Vec<&str> = self
            .indexed(variant)
            .map(|i| self.words[i as usize].as_str())
            .filter(|w| deletion_variants(w, self.max_edit_distance).contains(variant))
            .collect();
        out.sort_unstable();
        out
    }

    /// Best dictionary word within `max_edit_distance`: smallest distance,
    /// then highest count, then lexicographically smallest.
    pub fn lookup(&self, token: &str) -> Option<Suggestion> {
        if let Some(&count) = self.counts.get(token) {
            return Some(Suggestion {
                term: token.to_string(),
                distance: 0,
                count,
            });
        }
        let max = self.max_edit_distance;
        let len = token.chars().count();
        let mut seen = HashSet::new();
        let mut best: Option<Suggestion> = None;
        for variant in deletion_variants(token, max) {
            for idx in self.indexed(&variant) {
                if !seen.insert(idx) {
                    continue;
                }
                let word = &self.words[idx as usize];
                if word.chars().count().abs_diff(len) > max {
                    continue;
                }
                let distance = osa_distance(token, word);
                if distance > max {
                    continue;
                }
                let cand = Suggestion {
                    term: word.clone(),
                    distance,
                    count: self.counts[word],
                };
                if best.as_ref().is_none_or(|b| rank(&cand, b) == Ordering::Less) {
                    best = Some(cand);
                }
            }
        }
        best
    }

    /// Returns the corrected word, or the token itself when nothing is in range.
    pub fn correct_spelling(&self, token: &str) -> String {
        self.lookup(token).map_or_else(|| token.to_string(), |s| s.term)
    }

    /// Splits an unknown word into dictionary words, maximizing the product of
    /// word probabilities. Returns `[word]` when the word is already known or
    /// admits no full segmentation.
    pub fn segment_word(&self, word: &str) -> Vec<String> {
        if self.contains(word) {
            return vec![word.to_string()];
        }
        let chars: Vec<char> = word.chars().collect();
        let n = chars.len();
        // best[i] = (log prob, segment count, split point) for chars[..i]
        let mut best: Vec<Option<(f64, usize, usize)>> = vec![None; n + 1];
        best[0] = Some((0.0, 0, 0));
        for end in 1..=n {
            let lo = end.saturating_sub(self.max_word_chars);
            for start in lo..end {
                let Some((prev_score, prev_parts, _)) = best[start] else {
                    continue;
                };
                let piece: String = chars[start..end].iter().collect();
                let Some(&c) = self.counts.get(&piece) else {
                    continue;
                };
                let score = prev_score + (c as f64).ln() - self.log_total;
                let better = match best[end] {
                    None => true,
                    Some((s, parts, _)) => score > s || (score == s && prev_parts + 1 < parts),
                };
                if better {
                    best[end] = Some((score, prev_parts + 1, start));
                }
            }
        }
        match best[n] {
            Some((_, parts, _)) if parts >= 2 => {
                let mut pieces = Vec::with_capacity(parts);
                let mut end = n;
                while end > 0 {
                    let (_, _, start) = best[end].expect("reachable by construction");
                    pieces.push(chars[start..end].iter().collect());
                    end = start;
                }
                pieces.reverse();
                pieces
            }
            _ => vec![word.to_string()],
        }
    }
}

fn rank(a: &Suggestion, b: &Suggestion) -> Ordering {
    a.distance
        .cmp(&b.distance)
        .then(b.count.cmp(&a.count))
        .then_with(|| a.term.cmp(&b.term))
}
