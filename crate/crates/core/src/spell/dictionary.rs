use std::cmp::Ordering;
use std::collections::{HashMap, HashSet};
use std::io::{BufRead, Write};

use sha2::{Digest, Sha256};

use super::distance::DistanceMetric;
use crate::error::{Error, Result};
use crate::textnorm::PAD;

pub const DEFAULT_MAX_EDIT_DISTANCE: usize = 2;
pub const DEFAULT_PREFIX_LENGTH: usize = 7;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DictionaryConfig {
    pub max_edit_distance: usize,
    pub prefix_length: usize,
    pub metric: DistanceMetric,
}

impl Default for DictionaryConfig {
    fn default() -> Self {
        DictionaryConfig {
            max_edit_distance: DEFAULT_MAX_EDIT_DISTANCE,
            prefix_length: DEFAULT_PREFIX_LENGTH,
            metric: DistanceMetric::DamerauOsa,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Suggestion {
    pub word: String,
    pub distance: usize,
    pub frequency: u64,
}

impl Suggestion {
    /// Ranking order: lower distance, then higher frequency, then lexicographic.
    pub fn rank_cmp(&self, other: &Suggestion) -> Ordering {
        self.distance
            .cmp(&other.distance)
            .then_with(|| other.frequency.cmp(&self.frequency))
            .then_with(|| self.word.cmp(&other.word))
    }
}

/// Word counts plus a symmetric-delete index: every string reachable by
/// deleting up to `max_edit_distance` characters from a word's first
/// `prefix_length` characters maps back to that word.
#[derive(Debug, Clone)]
pub struct FrequencyDictionary {
    config: DictionaryConfig,
    entries: HashMap<String, u64>,
    deletes: HashMap<String, Vec<String>>,
    total: u64,
    max_word_len: usize,
}

impl Default for FrequencyDictionary {
    fn default() -> Self {
        Self::new(DictionaryConfig::default())
    }
}

fn prefix(chars: &[char], len: usize) -> &[char] {
    &chars[..chars.len().min(len)]
}

/// All distinct strings obtained from `chars` by deleting at most
/// `max_deletes` characters, including `chars` itself.
fn delete_variants(chars: &[char], max_deletes: usize) -> HashSet<String> {
    let mut seen = HashSet::new();
    let mut frontier: Vec<Vec<char>> = vec![chars.to_vec()];
    seen.insert(chars.iter().collect::<String>());
    for _ in 0..max_deletes {
        let mut next = Vec::new();
        for item in &frontier {
            for i in 0..item.len() {
                let mut shorter = item.clone();
                shorter.remove(i);
                if seen.insert(shorter.iter().collect()) {
                    next.push(shorter);
                }
            }
        }
        frontier = next;
    }
    seen
}

impl FrequencyDictionary {
    pub fn new(config: DictionaryConfig) -> Self {
        FrequencyDictionary {
            config,
            entries: HashMap::new(),
            deletes: HashMap::new(),
            total: 0,
            max_word_len: 0,
        }
    }

    /// Counts corpus tokens (ignoring padding) and keeps words seen at least
    /// `min_count` times.
    pub fn build<S: AsRef<str>>(corpus: &[Vec<S>], min_count: u64, config: DictionaryConfig) -> Self {
        let mut counts: HashMap<&str, u64> = HashMap::new();
        for tok in corpus.iter().flatten() {
            let tok = tok.as_ref();
            if tok != PAD && !tok.is_empty() {
                *counts.entry(tok).or_default() += 1;
            }
        }
        let mut dict = Self::new(config);
        let mut kept: Vec<(&str, u64)> = counts.into_iter().filter(|&(_, c)| c >= min_count.max(1)).collect();
        kept.sort_unstable();
        for (word, count) in kept {
            dict.insert(word, count);
        }
        dict
    }

    /// Adds `count` occurrences of `word`, indexing it if it is new.
    pub fn insert(&mut self, word: &str, count: u64) {
        if word.is_empty() || count == 0 {
            return;
        }
        self.total += count;
        if let Some(c) = self.entries.get_mut(word) {
            *c += count;
            return;
        }
        self.entries.insert(word.to_owned(), count);
        let chars: Vec<char> = word.chars().collect();
        self.max_word_len = self.max_word_len.max(chars.len());
        let prefix = prefix(&chars, self.config.prefix_length);
        for variant in delete_variants(prefix, self.config.max_edit_distance) {
            let bucket = self.deletes.entry(variant).or_default();
            if let Err(pos) = bucket.binary_search_by(|w| w.as_str().cmp(word)) {
                bucket.insert(pos, word.to_owned());
            }
        }
    }

    pub fn config(&self) -> DictionaryConfig {
        self.config
    }

    pub fn max_edit_distance(&self) -> usize {
        self.config.max_edit_distance
    }

    pub fn get(&self, word: &str) -> Option<u64> {
        self.entries.get(word).copied()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.entries.contains_key(word)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Sum of all counts.
    pub fn total_count(&self) -> u64 {
        self.total
    }

    /// Length in characters of the longest word.
    pub fn max_word_len(&self) -> usize {
        self.max_word_len
    }

    pub fn words(&self) -> impl Iterator<Item = (&str, u64)> {
        self.entries.iter().map(|(w, &c)| (w.as_str(), c))
    }

    /// Source words indexed under a delete variant.
    pub fn delete_bucket(&self, variant: &str) -> &[String] {
        self.deletes.get(variant).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Closest word within the dictionary's maximum edit distance.
    pub fn lookup(&self, query: &str) -> Option<Suggestion> {
        self.lookup_within(query, self.config.max_edit_distance)
    }

    /// Closest word within `max_distance` (capped at the indexed distance),
    /// ranked by [`Suggestion::rank_cmp`].
    pub fn lookup_within(&self, query: &str, max_distance: usize) -> Option<Suggestion> {
        if let Some(&frequency) = self.entries.get(query) {
            return Some(Suggestion {
                word: query.to_owned(),
                distance: 0,
                frequency,
            });
        }
        let max_distance = max_distance.min(self.config.max_edit_distance);
        if max_distance == 0 {
            return None;
        }
        let qchars: Vec<char> = query.chars().collect();
        let qprefix = prefix(&qchars, self.config.prefix_length);
        let mut checked: HashSet<&str> = HashSet::new();
        let mut best: Option<Suggestion> = None;
        let mut wchars = Vec::new();
        for variant in delete_variants(qprefix, max_distance) {
            for word in self.delete_bucket(&variant) {
                if !checked.insert(word.as_str()) {
                    continue;
                }
                wchars.clear();
                wchars.extend(word.chars());
                let Some(distance) = self.config.metric.distance(&qchars, &wchars, max_distance) else {
                    continue;
                };
                let candidate = Suggestion {
                    word: word.clone(),
                    distance,
                    frequency: self.entries[word],
                };
                if best.as_ref().is_none_or(|b| candidate.rank_cmp(b) == Ordering::Less) {
                    best = Some(candidate);
                }
            }
        }
        best
    }

    /// Writes `word count` lines sorted by descending count, ties by word.
    pub fn write_to<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let mut rows: Vec<(&str, u64)> = self.words().collect();
        rows.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        for (word, count) in rows {
            writeln!(out, "{word} {count}")?;
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("dictionary words are UTF-8")
    }

    /// Hex SHA-256 of the canonical text form.
    pub fn content_hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_text().as_bytes()))
    }

    pub fn read_from<R: BufRead>(reader: R, source_name: &str, config: DictionaryConfig) -> Result<Self> {
        let mut dict = Self::new(config);
        for (idx, line) in reader.lines().enumerate() {
            let lineno = idx + 1;
            let line = line.map_err(|e| Error::parse(source_name, lineno, e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let (Some(word), Some(count), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(Error::parse(source_name, lineno, "expected `word count`"));
            };
            let count: u64 = count
                .parse()
                .ok()
                .filter(|&c| c > 0)
                .ok_or_else(|| Error::parse(source_name, lineno, format!("invalid count `{count}`")))?;
            if dict.contains(word) {
                return Err(Error::parse(source_name, lineno, format!("duplicate word `{word}`")));
            }
            dict.insert(word, count);
        }
        Ok(dict)
    }
}
