//! Brute-force references for dictionary lookup and segmentation.

use std::collections::HashMap;

use offtweet::spell::{DictionaryConfig, FrequencyDictionary};
use rand::seq::IndexedRandom;
use rand::Rng;

/// Full-matrix optimal-string-alignment distance, no early exit.
pub fn osa(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let (n, m) = (a.len(), b.len());
    let mut d = vec![vec![0usize; m + 1]; n + 1];
    for (i, row) in d.iter_mut().enumerate() {
        row[0] = i;
    }
    for j in 0..=m {
        d[0][j] = j;
    }
    for i in 1..=n {
        for j in 1..=m {
            let cost = usize::from(a[i - 1] != b[j - 1]);
            d[i][j] = (d[i - 1][j] + 1).min(d[i][j - 1] + 1).min(d[i - 1][j - 1] + cost);
            if i > 1 && j > 1 && a[i - 1] == b[j - 2] && a[i - 2] == b[j - 1] {
                d[i][j] = d[i][j].min(d[i - 2][j - 2] + 1);
            }
        }
    }
    d[n][m]
}

/// Linear scan: smallest distance, then highest count, then smallest word.
pub fn brute_lookup(query: &str, words: &[(String, u64)], max: usize) -> Option<(usize, String, u64)> {
    words
        .iter()
        .map(|(w, c)| (osa(query, w), w, *c))
        .filter(|&(d, _, _)| d <= max)
        .min_by(|a, b| a.0.cmp(&b.0).then(b.2.cmp(&a.2)).then(a.1.cmp(b.1)))
        .map(|(d, w, c)| (d, w.clone(), c))
}

pub fn random_word<R: Rng>(rng: &mut R, alphabet: &[u8], min_len: usize, max_len: usize) -> String {
    let len = rng.random_range(min_len..=max_len);
    (0..len).map(|_| *alphabet.choose(rng).unwrap() as char).collect()
}

/// Distinct words with counts in `1..=1000`.
pub fn random_words<R: Rng>(rng: &mut R, n: usize, alphabet: &[u8], max_len: usize) -> Vec<(String, u64)> {
    let mut seen = HashMap::new();
    let mut attempts = 0;
    while seen.len() < n && attempts < n * 50 {
        attempts += 1;
        let w = random_word(rng, alphabet, 1, max_len);
        let c = rng.random_range(1..=1000);
        seen.entry(w).or_insert(c);
    }
    let mut words: Vec<(String, u64)> = seen.into_iter().collect();
    words.sort();
    words
}

pub fn dictionary(words: &[(String, u64)]) -> FrequencyDictionary {
    let mut d = FrequencyDictionary::new(DictionaryConfig::default());
    for (w, c) in words {
        d.insert(w, *c);
    }
    d
}

/// Applies `edits` random insertions, deletions, substitutions or adjacent swaps.
pub fn mutate<R: Rng>(rng: &mut R, word: &str, edits: usize, alphabet: &[u8]) -> String {
    let mut w: Vec<char> = word.chars().collect();
    for _ in 0..edits {
        let c = *alphabet.choose(rng).unwrap() as char;
        match rng.random_range(0..4) {
            0 => {
                let at = rng.random_range(0..=w.len());
                w.insert(at, c);
            }
            1 if !w.is_empty() => {
                let at = rng.random_range(0..w.len());
                w.remove(at);
            }
            2 if !w.is_empty() => {
                let at = rng.random_range(0..w.len());
                w[at] = c;
            }
            3 if w.len() >= 2 => {
                let at = rng.random_range(0..w.len() - 1);
                w.swap(at, at + 1);
            }
            _ => w.push(c),
        }
    }
    w.into_iter().collect()
}

/// Query mix: exact words, words one to three edits away, and unrelated strings.
pub fn random_query<R: Rng>(rng: &mut R, words: &[(String, u64)], alphabet: &[u8], max_len: usize) -> String {
    match rng.random_range(0..10) {
        0 => words.choose(rng).unwrap().0.clone(),
        1..=7 => {
            let edits = rng.random_range(1..=3);
            let base = words.choose(rng).unwrap().0.clone();
            mutate(rng, &base, edits, alphabet)
        }
        _ => random_word(rng, alphabet, 1, max_len + 2),
    }
}

/// Independent per-part score: brute-force correction within distance 1,
/// `ln(count / N)` less `ln N` per edit; unknown parts `−(ln N + len · ln 10)`.
pub fn part_score(part: &str, words: &[(String, u64)]) -> f64 {
    let n = words.iter().map(|(_, c)| c).sum::<u64>().max(1) as f64;
    match brute_lookup(part, words, 1) {
        Some((d, _, c)) => (c as f64 / n).ln() - d as f64 * n.ln(),
        None => -(n.ln() + part.chars().count() as f64 * 10f64.ln()),
    }
}

/// Best total score over all `2^(n−1)` splits whose parts are no longer
/// than the longest dictionary word.
pub fn exhaustive_segment_score(text: &str, words: &[(String, u64)]) -> f64 {
    let chars: Vec<char> = text.chars().collect();
    let n = chars.len();
    if n == 0 {
        return 0.0;
    }
    let cap = words.iter().map(|(w, _)| w.chars().count()).max().unwrap_or(1).max(1);
    let mut memo: HashMap<(usize, usize), f64> = HashMap::new();
    let mut best = f64::NEG_INFINITY;
    for mask in 0u32..(1 << (n - 1)) {
        let mut start = 0;
        let mut total = 0.0;
        let mut feasible = true;
        for end in 1..=n {
            if end == n || mask & (1 << (end - 1)) != 0 {
                if end - start > cap {
                    feasible = false;
                    break;
                }
                total += *memo.entry((start, end)).or_insert_with(|| {
                    let part: String = chars[start..end].iter().collect();
                    part_score(&part, words)
                });
                start = end;
            }
        }
        if feasible && total > best {
            best = total;
        }
    }
    best
}
