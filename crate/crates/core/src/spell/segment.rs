//! Word segmentation by dynamic programming over split points, scoring each
//! part by its unigram log probability after a small spelling correction.

use std::cmp::Ordering;

use super::dictionary::FrequencyDictionary;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentConfig {
    /// Edit distance allowed when correcting a single part.
    pub max_part_distance: usize,
    /// Unknown parts score `ln(1 / (N * base^len))`.
    pub unknown_base: f64,
    /// Log-score charged per edit of a corrected part; `None` charges
    /// `ln N`, pricing one edit like one singleton occurrence.
    pub edit_cost: Option<f64>,
}

impl Default for SegmentConfig {
    fn default() -> Self {
        SegmentConfig {
            max_part_distance: 1,
            unknown_base: 10.0,
            edit_cost: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Segmentation {
    pub parts: Vec<String>,
    /// Sum of natural-log part scores.
    pub score: f64,
    /// Total edit distance of the corrections applied.
    pub distance: usize,
    /// Whether every part is a dictionary word (possibly after correction).
    pub all_known: bool,
}

impl Segmentation {
    pub fn empty() -> Self {
        Segmentation {
            parts: Vec::new(),
            score: 0.0,
            distance: 0,
            all_known: true,
        }
    }
}

/// Score of one candidate part: the corrected word, its log probability
/// (less the edit cost), the correction distance, and whether it was found.
#[derive(Debug, Clone, PartialEq)]
pub struct PartScore {
    pub word: String,
    pub log_prob: f64,
    pub distance: usize,
    pub known: bool,
}

/// Longest part the segmenter considers for this dictionary.
pub fn max_part_len(dict: &FrequencyDictionary) -> usize {
    dict.max_word_len().max(1)
}

pub fn unknown_log_prob(dict: &FrequencyDictionary, len: usize, cfg: &SegmentConfig) -> f64 {
    let n = dict.total_count().max(1) as f64;
    -(n.ln() + len as f64 * cfg.unknown_base.ln())
}

pub fn score_part(part: &str, dict: &FrequencyDictionary, cfg: &SegmentConfig) -> PartScore {
    let n = dict.total_count().max(1) as f64;
    match dict.lookup_within(part, cfg.max_part_distance) {
        Some(s) => PartScore {
            log_prob: (s.frequency as f64 / n).ln() - s.distance as f64 * cfg.edit_cost.unwrap_or(n.ln()),
            word: s.word,
            distance: s.distance,
            known: true,
        },
        None => PartScore {
            log_prob: unknown_log_prob(dict, part.chars().count(), cfg),
            word: part.to_owned(),
            distance: 0,
            known: false,
        },
    }
}

#[derive(Clone, Copy)]
struct Cell {
    score: f64,
    distance: usize,
    parts: usize,
    from: usize,
}

/// Higher score first, then fewer corrections, then fewer parts.
fn better(a: &Cell, b: &Cell) -> bool {
    match a.score.partial_cmp(&b.score) {
        Some(Ordering::Greater) => true,
        Some(Ordering::Less) => false,
        _ => (a.distance, a.parts) < (b.distance, b.parts),
    }
}

/// Splits `text` (no spaces needed) into the highest-scoring sequence of
/// parts no longer than the dictionary's longest word.
pub fn segment(text: &str, dict: &FrequencyDictionary, cfg: &SegmentConfig) -> Segmentation {
    let chars: Vec<char> = text.chars().filter(|c| !c.is_whitespace()).collect();
    let n = chars.len();
    if n == 0 {
        return Segmentation::empty();
    }
    let cap = max_part_len(dict);
    // scores[j][len - 1] is the part ending at j of length len
    let mut parts: Vec<Vec<PartScore>> = Vec::with_capacity(n);
    for j in 1..=n {
        let start = j.saturating_sub(cap);
        parts.push(
            (start..j)
                .rev()
                .map(|i| score_part(&chars[i..j].iter().collect::<String>(), dict, cfg))
                .collect(),
        );
    }
    let mut best: Vec<Option<Cell>> = vec![None; n + 1];
    best[0] = Some(Cell {
        score: 0.0,
        distance: 0,
        parts: 0,
        from: 0,
    });
    for j in 1..=n {
        let mut chosen: Option<Cell> = None;
        for (k, part) in parts[j - 1].iter().enumerate() {
            let i = j - 1 - k;
            let Some(prev) = best[i] else { continue };
            let cand = Cell {
                score: prev.score + part.log_prob,
                distance: prev.distance + part.distance,
                parts: prev.parts + 1,
                from: i,
            };
            if chosen.as_ref().is_none_or(|c| better(&cand, c)) {
                chosen = Some(cand);
            }
        }
        best[j] = chosen;
    }
    let end = best[n].expect("every position is reachable with parts of length 1");
    let mut out = Vec::with_capacity(end.parts);
    let mut all_known = true;
    let mut j = n;
    while j > 0 {
        let i = best[j].unwrap().from;
        let part = &parts[j - 1][j - 1 - i];
        all_known &= part.known;
        out.push(part.word.clone());
        j = i;
    }
    out.reverse();
    Segmentation {
        parts: out,
        score: end.score,
        distance: end.distance,
        all_known,
    }
}
