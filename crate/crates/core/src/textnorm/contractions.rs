use std::collections::HashMap;

use crate::error::{Error, Result};

/// Contraction expansions: whole-word entries plus suffix families such as
/// `n't` and `'re`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ContractionMap {
    words: HashMap<String, String>,
    /// Sorted longest key first.
    suffixes: Vec<(String, String)>,
}

impl ContractionMap {
    pub fn english() -> Self {
        Self::parse(include_str!("resources/contractions_en.txt"), "contractions_en.txt")
            .expect("bundled contraction table is well formed")
    }

    /// Parses `key expansion...` lines; keys prefixed with `*` are suffix
    /// families. Blank lines and `#` comments are skipped.
    pub fn parse(text: &str, source_name: &str) -> Result<Self> {
        let mut map = ContractionMap::default();
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, expansion) = line
                .split_once(char::is_whitespace)
                .map(|(k, e)| (k, e.trim()))
                .filter(|(_, e)| !e.is_empty())
                .ok_or_else(|| Error::parse(source_name, idx + 1, "expected `key expansion`"))?;
            map.insert(key, expansion);
        }
        Ok(map)
    }

    pub fn insert(&mut self, key: &str, expansion: &str) {
        match key.strip_prefix('*') {
            Some(suffix) => {
                self.suffixes.retain(|(k, _)| k != suffix);
                self.suffixes.push((suffix.to_owned(), expansion.to_owned()));
                self.suffixes
                    .sort_by(|a, b| b.0.len().cmp(&a.0.len()).then_with(|| a.0.cmp(&b.0)));
            }
            None => {
                self.words.insert(key.to_owned(), expansion.to_owned());
            }
        }
    }

    /// Expands a single whitespace-free token.
    pub fn expand(&self, token: &str) -> String {
        if let Some(exp) = self.words.get(token) {
            return exp.clone();
        }
        for (suffix, exp) in &self.suffixes {
            if let Some(stem) = token.strip_suffix(suffix.as_str()) {
                if !stem.is_empty() {
                    return format!("{stem} {exp}");
                }
            }
        }
        token.to_owned()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_families() {
        let m = ContractionMap::english();
        assert_eq!(m.expand("aren't"), "are not");
        assert_eq!(m.expand("i'm"), "i am");
        assert_eq!(m.expand("cats"), "cats");
        assert_eq!(m.expand("won't"), "will not");
        assert_eq!(m.expand("don't"), "do not");
        assert_eq!(m.expand("they're"), "they are");
        assert_eq!(m.expand("she's"), "she is");
        assert_eq!(m.expand("we'll"), "we will");
        assert_eq!(m.expand("i've"), "i have");
        assert_eq!(m.expand("you'd"), "you would");
        assert_eq!(m.expand("'s"), "'s");
    }

    #[test]
    fn rejects_key_without_expansion() {
        assert!(ContractionMap::parse("lonely\n", "x").is_err());
    }
}
