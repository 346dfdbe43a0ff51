//! Rule-based English lemmatizer: an exception table for irregular forms,
//! then ordered suffix rules for `-ies`, `-ied`, `-ing`, `-ed`, `-es`, `-s`.

use std::collections::HashMap;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Lemmatizer {
    exceptions: HashMap<String, String>,
}

fn is_vowel(chars: &[u8], i: usize) -> bool {
    match chars[i] {
        b'a' | b'e' | b'i' | b'o' | b'u' => true,
        // `y` acts as a vowel after a consonant (try, cry, lying)
        b'y' => i > 0 && !is_vowel(chars, i - 1),
        _ => false,
    }
}

fn has_vowel(stem: &[u8]) -> bool {
    (0..stem.len()).any(|i| is_vowel(stem, i))
}

fn vowel_groups(stem: &[u8]) -> usize {
    let mut groups = 0;
    let mut in_group = false;
    for i in 0..stem.len() {
        let v = is_vowel(stem, i);
        if v && !in_group {
            groups += 1;
        }
        in_group = v;
    }
    groups
}

/// consonant-vowel-consonant ending whose last letter is not w, x or y
fn ends_cvc(stem: &[u8]) -> bool {
    let n = stem.len();
    n >= 3
        && !is_vowel(stem, n - 3)
        && is_vowel(stem, n - 2)
        && !is_vowel(stem, n - 1)
        && !matches!(stem[n - 1], b'w' | b'x' | b'y')
}

/// Restores the stem of an `-ing`/`-ed` form: undoubles a final double
/// consonant (stopp -> stop, but kill stays), or appends a dropped `e`
/// (mak -> make, debat -> debate).
fn restore_stem(stem: &str) -> String {
    let b = stem.as_bytes();
    let n = b.len();
    if n >= 3 {
        let last = b[n - 1];
        if last == b[n - 2]
            && !is_vowel(b, n - 1)
            && !matches!(last, b'l' | b's' | b'z' | b'f')
            && is_vowel(b, n - 3)
            && n >= 4
            && !is_vowel(b, n - 4)
        {
            return stem[..n - 1].to_owned();
        }
    }
    let restore_e = (n >= 3 && (stem.ends_with("bl") || stem.ends_with("iz")))
        || (n >= 3 && stem.ends_with("at") && !is_vowel(b, n - 3))
        || (ends_cvc(b) && vowel_groups(b) == 1);
    if restore_e {
        format!("{stem}e")
    } else {
        stem.to_owned()
    }
}

impl Lemmatizer {
    pub fn english() -> Self {
        Self::parse(
            include_str!("resources/lemma_exceptions_en.txt"),
            "lemma_exceptions_en.txt",
        )
        .expect("bundled lemma table is well formed")
    }

    /// Parses `form lemma` lines; blank lines and `#` comments are skipped.
    pub fn parse(text: &str, source_name: &str) -> Result<Self> {
        let mut exceptions = HashMap::new();
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split_whitespace();
            match (parts.next(), parts.next(), parts.next()) {
                (Some(form), Some(lemma), None) => {
                    exceptions.insert(form.to_owned(), lemma.to_owned());
                }
                _ => return Err(Error::parse(source_name, idx + 1, "expected `form lemma`")),
            }
        }
        Ok(Lemmatizer { exceptions })
    }

    pub fn insert_exception(&mut self, form: &str, lemma: &str) {
        self.exceptions.insert(form.to_owned(), lemma.to_owned());
    }

    pub fn lemmatize(&self, token: &str) -> String {
        if let Some(lemma) = self.exceptions.get(token) {
            return lemma.clone();
        }
        if token.len() <= 3 || !token.bytes().all(|b| b.is_ascii_lowercase()) {
            return token.to_owned();
        }
        for (suffix, replacement) in [("ies", "y"), ("ied", "y")] {
            if let Some(stem) = token.strip_suffix(suffix) {
                // lies -> lie, cries -> cry
                return if stem.len() >= 2 {
                    format!("{stem}{replacement}")
                } else {
                    format!("{stem}ie")
                };
            }
        }
        if token.ends_with("eed") {
            return token.to_owned();
        }
        for suffix in ["ing", "ed"] {
            if let Some(stem) = token.strip_suffix(suffix) {
                if stem.len() >= 2 && has_vowel(stem.as_bytes()) {
                    return restore_stem(stem);
                }
                return token.to_owned();
            }
        }
        if let Some(stem) = token.strip_suffix("es") {
            if ["s", "x", "z", "ch", "sh"].iter().any(|s| stem.ends_with(s)) {
                return stem.to_owned();
            }
        }
        if let Some(stem) = token.strip_suffix('s') {
            if !(stem.ends_with('s') || stem.ends_with('u') || stem.ends_with('i')) {
                return stem.to_owned();
            }
        }
        token.to_owned()
    }
}
