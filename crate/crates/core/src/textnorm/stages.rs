//! Individual normalization stages. Every stage is a pure function and a
//! fixpoint normalizer: applying it twice gives the same result as once.

use std::collections::HashSet;
use std::sync::LazyLock;

use regex::Regex;

use super::contractions::ContractionMap;

static URL_RE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"https?://\S+").unwrap());
static ENTITY_RE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"&[a-zA-Z]+;|&#[0-9]+;").unwrap());

/// The anonymized mention form used in the OLID data.
pub const MENTION: &str = "@USER";
/// The anonymized link placeholder used in the OLID data.
pub const URL_PLACEHOLDER: &str = "URL";

/// Words kept by [`remove_stopwords`] when negations are preserved.
pub const NEGATIONS: [&str; 4] = ["not", "no", "nor", "never"];

pub(crate) fn collapse_whitespace(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Repeats a removal until nothing more matches, so that removals which
/// splice a new match together are also caught.
fn remove_to_fixpoint(text: &str, remove: impl Fn(&str) -> String) -> String {
    let mut current = text.to_owned();
    loop {
        let next = remove(&current);
        if next == current {
            return current;
        }
        current = next;
    }
}

pub fn strip_mentions(text: &str) -> String {
    let removed = remove_to_fixpoint(text, |s| s.replace(MENTION, " "));
    collapse_whitespace(&removed)
}

pub fn strip_urls(text: &str) -> String {
    let removed = remove_to_fixpoint(text, |s| URL_RE.replace_all(s, " ").into_owned());
    removed
        .split_whitespace()
        .filter(|tok| *tok != URL_PLACEHOLDER)
        .collect::<Vec<_>>()
        .join(" ")
}

/// Removes (does not decode) named and numeric HTML entities. Whitespace is
/// left untouched; later stages collapse it.
pub fn strip_html_entities(text: &str) -> String {
    remove_to_fixpoint(text, |s| ENTITY_RE.replace_all(s, "").into_owned())
}

pub fn strip_hashtags(text: &str) -> String {
    text.split_whitespace()
        .filter(|tok| !tok.starts_with('#'))
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn lowercase(text: &str) -> String {
    text.to_lowercase()
}

fn is_spaced_symbol(c: char) -> bool {
    c.is_ascii() && !c.is_ascii_alphanumeric() && !c.is_ascii_whitespace() && !matches!(c, '\'' | '@' | '#')
}

/// Deletes every non-ASCII character, then isolates each remaining ASCII
/// symbol (anything but alphanumerics, whitespace, `'`, `@` and `#`) as its
/// own token.
pub fn ascii_and_symbol_spacing(text: &str) -> String {
    let mut out = String::with_capacity(text.len() + 8);
    for c in text.chars().filter(char::is_ascii) {
        if is_spaced_symbol(c) {
            out.push(' ');
            out.push(c);
            out.push(' ');
        } else {
            out.push(c);
        }
    }
    collapse_whitespace(&out)
}

pub fn expand_contractions(text: &str, map: &ContractionMap) -> String {
    text.split_whitespace()
        .map(|tok| map.expand(tok))
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn strip_punctuation(text: &str, punctuation: &HashSet<char>) -> String {
    let kept: String = text.chars().filter(|c| !punctuation.contains(c)).collect();
    collapse_whitespace(&kept)
}

pub fn strip_numbers(text: &str) -> String {
    text.split_whitespace()
        .map(|tok| tok.chars().filter(|c| !c.is_ascii_digit()).collect::<String>())
        .filter(|tok| !tok.is_empty())
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn remove_stopwords(tokens: &[String], stopwords: &HashSet<String>, keep_negations: bool) -> Vec<String> {
    tokens
        .iter()
        .filter(|tok| !stopwords.contains(tok.as_str()) || (keep_negations && NEGATIONS.contains(&tok.as_str())))
        .cloned()
        .collect()
}

/// Caps every run of identical characters at two.
pub fn reduce_word_lengths(token: &str) -> String {
    let mut out = String::with_capacity(token.len());
    let mut prev = None;
    let mut run = 0;
    for c in token.chars() {
        if Some(c) == prev {
            run += 1;
        } else {
            prev = Some(c);
            run = 1;
        }
        if run <= 2 {
            out.push(c);
        }
    }
    out
}

/// Reserved padding token; it cannot arise from normalization because `<`
/// and `>` are always split off as separate symbol tokens.
pub const PAD: &str = "<pad>";

/// Keeps the first `p` tokens, or appends [`PAD`] up to length `p`.
pub fn pad_or_truncate(tokens: &[String], p: usize) -> Vec<String> {
    let mut out: Vec<String> = tokens.iter().take(p).cloned().collect();
    out.resize(p, PAD.to_owned());
    out
}
