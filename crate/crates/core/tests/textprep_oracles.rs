use emopipe::textprep::{normalize, FrequencyDictionary, Resources, DEFAULT_MAX_EDIT_DISTANCE};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const LETTERS: &[u8] = b"abcdefghijklmnopqrstuvwxyz";

fn corrupt(word: &str, rng: &mut ChaCha8Rng) -> String {
    let mut chars: Vec<char> = word.chars().collect();
    for _ in 0..rng.random_range(1..=2) {
        let c = *LETTERS.choose(rng).unwrap() as char;
        match rng.random_range(0..4) {
            0 => chars.insert(rng.random_range(0..=chars.len()), c),
            1 if chars.len() > 1 => {
                chars.remove(rng.random_range(0..chars.len()));
            }
            2 if chars.len() > 1 => {
                let i = rng.random_range(0..chars.len() - 1);
                chars.swap(i, i + 1);
            }
            _ => {
                let i = rng.random_range(0..chars.len());
                chars[i] = c;
            }
        }
    }
    chars.into_iter().collect()
}

/// Dictionary words grouped by character length.
fn by_length(dict: &FrequencyDictionary) -> Vec<Vec<(&str, u64)>> {
    let mut buckets: Vec<Vec<(&str, u64)>> = Vec::new();
    for (word, count) in dict.iter() {
        let n = word.chars().count();
        if buckets.len() <= n {
            buckets.resize_with(n + 1, Vec::new);
        }
        buckets[n].push((word, count));
    }
    buckets
}

/// Exhaustive scan of every word whose length is within the edit budget:
/// smallest edit distance, then highest count, then term.
fn brute_force(buckets: &[Vec<(&str, u64)>], token: &str) -> Option<String> {
    let len = token.chars().count();
    let lo = len.saturating_sub(DEFAULT_MAX_EDIT_DISTANCE);
    let hi = (len + DEFAULT_MAX_EDIT_DISTANCE).min(buckets.len().saturating_sub(1));
    let mut best: Option<(usize, std::cmp::Reverse<u64>, &str)> = None;
    for bucket in buckets.get(lo..=hi).unwrap_or(&[]) {
        for &(word, count) in bucket {
            let d = strsim::osa_distance(token, word);
            if d > DEFAULT_MAX_EDIT_DISTANCE {
                continue;
            }
            let key = (d, std::cmp::Reverse(count), word);
            if best.is_none_or(|b| key < b) {
                best = Some(key);
            }
        }
    }
    best.map(|(_, _, w)| w.to_string())
}

#[test]
fn correction_agrees_with_exhaustive_scan() {
    let dict = FrequencyDictionary::builtin(DEFAULT_MAX_EDIT_DISTANCE);
    let pool: Vec<&str> = dict
        .words()
        .iter()
        .map(String::as_str)
        .filter(|w| w.chars().count() >= 4)
        .collect();
    let buckets = by_length(&dict);
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut agree = 0;
    let trials = 200;
    for _ in 0..trials {
        let word = *pool.choose(&mut rng).unwrap();
        let typo = corrupt(word, &mut rng);
        let got = dict.lookup(&typo).map(|s| s.term);
        let want = brute_force(&buckets, &typo);
        if got == want {
            agree += 1;
        } else {
            eprintln!("{typo}: {got:?} vs {want:?}");
        }
    }
    assert_eq!(agree, trials);
}

#[test]
fn normalization_goldens() {
    let res = Resources::builtin();
    let cases = [
        ("i've", "i have"),
        ("ilike", "i like"),
        ("$amzn", "<ticker>"),
        ("125", "<number>"),
        ("1,000", "<number>"),
        ("not feeling it :)", "not feeling it :)"),
    ];
    for (input, want) in cases {
        assert_eq!(normalize(input, &res).normalized_text, want, "{input}");
    }
}
