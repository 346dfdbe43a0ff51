//! Vocabulary construction and embedding matrices, learnt or loaded from
//! GloVe-format text.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::neural::init::uniform_limit;
use crate::neural::Tensor2;
use crate::textnorm::PAD;

pub const UNK: &str = "<unk>";
pub const PAD_ID: usize = 0;
pub const UNK_ID: usize = 1;
pub const DEFAULT_DIM: usize = 100;
/// Half-width of the uniform draw for learnt embeddings.
pub const LEARNT_INIT_LIMIT: f64 = 0.05;

/// Word ↔ index map with `<pad>` at 0 and `<unk>` at 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    words: Vec<String>,
    index: HashMap<String, usize>,
}

impl Default for Vocabulary {
    fn default() -> Self {
        Self::from_words(Vec::<String>::new()).expect("empty vocabulary is valid")
    }
}

impl Vocabulary {
    /// Builds from the non-reserved words in index order (index 2 onward).
    pub fn from_words<S: Into<String>>(words: impl IntoIterator<Item = S>) -> Result<Self> {
        let mut all = vec![PAD.to_owned(), UNK.to_owned()];
        let mut index: HashMap<String, usize> = HashMap::new();
        index.insert(PAD.to_owned(), PAD_ID);
        index.insert(UNK.to_owned(), UNK_ID);
        for w in words {
            let w = w.into();
            if index.contains_key(&w) {
                return Err(Error::Data(format!("duplicate vocabulary entry {w:?}")));
            }
            index.insert(w.clone(), all.len());
            all.push(w);
        }
        Ok(Vocabulary { words: all, index })
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    /// Never true: the reserved entries are always present.
    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn get(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn id(&self, word: &str) -> usize {
        self.get(word).unwrap_or(UNK_ID)
    }

    pub fn word(&self, id: usize) -> Option<&str> {
        self.words.get(id).map(String::as_str)
    }

    /// Every entry, reserved ones included, in index order.
    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn encode<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<usize> {
        tokens.iter().map(|t| self.id(t.as_ref())).collect()
    }
}

/// Indices by descending corpus frequency, ties broken lexicographically.
/// Words below `min_count` are left out and map to `<unk>`.
pub fn build_vocab<S: AsRef<str>>(corpus: &[Vec<S>], min_count: u64) -> Vocabulary {
    let mut counts: HashMap<&str, u64> = HashMap::new();
    for seq in corpus {
        for tok in seq {
            let t = tok.as_ref();
            if t != PAD && t != UNK {
                *counts.entry(t).or_insert(0) += 1;
            }
        }
    }
    let mut ranked: Vec<(&str, u64)> = counts.into_iter().filter(|&(_, c)| c >= min_count.max(1)).collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    Vocabulary::from_words(ranked.into_iter().map(|(w, _)| w.to_owned())).expect("counted words are unique")
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    pub table: Tensor2<f32>,
    pub trainable: bool,
}

impl EmbeddingMatrix {
    pub fn dim(&self) -> usize {
        self.table.cols()
    }

    pub fn rows(&self) -> usize {
        self.table.rows()
    }
}

/// Result of reading a GloVe file against a vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct GloveLoad {
    pub matrix: EmbeddingMatrix,
    /// Vocabulary words (excluding `<pad>` and `<unk>`) found in the file.
    pub found: usize,
    /// `found / (V − 2)`, or 0 for a vocabulary with no words.
    pub coverage: f64,
}

/// Streams `word v1 … vD` lines, keeping only rows for vocabulary words.
/// Words missing from the file, and `<unk>` unless present, stay zero.
pub fn load_glove<R: BufRead>(
    mut reader: R,
    source_name: &str,
    vocab: &Vocabulary,
    dim: usize,
    trainable: bool,
) -> Result<GloveLoad> {
    let mut table = Tensor2::<f32>::zeros(vocab.len(), dim);
    let mut seen = vec![false; vocab.len()];
    let mut found = 0;
    let mut line = String::new();
    let mut line_no = 0;
    let mut values: Vec<f32> = Vec::with_capacity(dim);
    loop {
        line.clear();
        let n = reader.read_line(&mut line).map_err(|e| Error::io(source_name, e))?;
        if n == 0 {
            break;
        }
        line_no += 1;
        let trimmed = line.trim_end_matches(['\n', '\r']);
        if trimmed.trim().is_empty() {
            continue;
        }
        let mut fields = trimmed.split(' ');
        let word = fields.next().unwrap_or_default();
        values.clear();
        for f in fields {
            let v: f32 = f
                .parse()
                .map_err(|_| Error::parse(source_name, line_no, format!("unparsable value {f:?}")))?;
            if !v.is_finite() {
                return Err(Error::parse(source_name, line_no, format!("non-finite value {f:?}")));
            }
            values.push(v);
        }
        if values.len() != dim {
            if line_no == 1 {
                return Err(Error::Dimension {
                    expected: dim,
                    found: values.len(),
                });
            }
            return Err(Error::parse(
                source_name,
                line_no,
                format!("expected {dim} values, found {}", values.len()),
            ));
        }
        if let Some(id) = vocab.get(word) {
            if id == PAD_ID || seen[id] {
                continue;
            }
            seen[id] = true;
            table.row_mut(id).copy_from_slice(&values);
            if id != UNK_ID {
                found += 1;
            }
        }
    }
    let words = vocab.len() - 2;
    let coverage = if words == 0 { 0.0 } else { found as f64 / words as f64 };
    Ok(GloveLoad {
        matrix: EmbeddingMatrix { table, trainable },
        found,
        coverage,
    })
}

/// Every row but `<pad>` uniform on ±0.05 from `seed`.
pub fn init_learnt(vocab: &Vocabulary, dim: usize, seed: u64) -> EmbeddingMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut table: Tensor2<f32> = uniform_limit(vocab.len(), dim, LEARNT_INIT_LIMIT, &mut rng);
    table.row_mut(PAD_ID).fill(0.0);
    EmbeddingMatrix { table, trainable: true }
}

/// Fills the `<unk>` row uniformly on ±0.05 (it is zero after GloVe loading).
pub fn randomize_unk(matrix: &mut EmbeddingMatrix, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let row: Tensor2<f32> = uniform_limit(1, matrix.dim(), LEARNT_INIT_LIMIT, &mut rng);
    matrix.table.row_mut(UNK_ID).copy_from_slice(row.data());
}

/// Stacks the rows for `tokens` into a `p × D` matrix.
pub fn embed<S: AsRef<str>>(tokens: &[S], vocab: &Vocabulary, matrix: &EmbeddingMatrix) -> Tensor2<f32> {
    let mut out = Tensor2::zeros(tokens.len(), matrix.dim());
    for (t, tok) in tokens.iter().enumerate() {
        out.row_mut(t).copy_from_slice(matrix.table.row(vocab.id(tok.as_ref())));
    }
    out
}

/// Writes every row except `<pad>` in GloVe text format. Values use the
/// shortest representation that parses back to the same `f32`.
pub fn dump_glove<W: Write>(mut out: W, vocab: &Vocabulary, matrix: &EmbeddingMatrix) -> std::io::Result<()> {
    for (id, word) in vocab.words().iter().enumerate().skip(1) {
        write!(out, "{word}")?;
        for v in matrix.table.row(id) {
            write!(out, " {v}")?;
        }
        writeln!(out)?;
    }
    out.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corpus(rows: &[&[&str]]) -> Vec<Vec<String>> {
        rows.iter().map(|r| r.iter().map(|s| s.to_string()).collect()).collect()
    }

    #[test]
    fn vocab_ordering() {
        let v = build_vocab(&corpus(&[&["a", "b", "a"]]), 1);
        assert_eq!(v.words(), &["<pad>", "<unk>", "a", "b"]);
        let v = build_vocab::<String>(&[], 1);
        assert_eq!(v.words(), &["<pad>", "<unk>"]);
        let v = build_vocab(&corpus(&[&["y"; 5], &["x"; 5]]), 1);
        assert_eq!((v.id("x"), v.id("y")), (2, 3));
    }

    #[test]
    fn vocab_ignores_reserved_and_rare() {
        let v = build_vocab(&corpus(&[&["<pad>", "<unk>", "a", "a", "b"]]), 2);
        assert_eq!(v.words(), &["<pad>", "<unk>", "a"]);
        assert_eq!(v.id("b"), UNK_ID);
    }

    #[test]
    fn glove_copy_and_coverage() {
        let v = Vocabulary::from_words(["a"]).unwrap();
        let g = load_glove("a 0.1 0.2\n".as_bytes(), "g", &v, 2, true).unwrap();
        assert_eq!(g.matrix.table.row(2), &[0.1, 0.2]);
        assert_eq!(g.coverage, 1.0);
        let v = Vocabulary::from_words(["q"]).unwrap();
        let g = load_glove("a 0.1 0.2\n".as_bytes(), "g", &v, 2, true).unwrap();
        assert_eq!(g.matrix.table.row(2), &[0.0, 0.0]);
        assert_eq!(g.coverage, 0.0);
    }

    #[test]
    fn glove_errors() {
        let v = Vocabulary::from_words(["a"]).unwrap();
        let err = load_glove("a 0.1 0.2\nb 0.3\n".as_bytes(), "g.txt", &v, 2, true).unwrap_err();
        assert!(err.to_string().starts_with("g.txt:2:"), "{err}");
        let err = load_glove("a 0.1 zz\n".as_bytes(), "g.txt", &v, 2, true).unwrap_err();
        assert!(err.to_string().starts_with("g.txt:1:"), "{err}");
        let err = load_glove("a 0.1 0.2 0.3\n".as_bytes(), "g.txt", &v, 2, true).unwrap_err();
        assert!(matches!(err, Error::Dimension { expected: 2, found: 3 }));
    }

    #[test]
    fn learnt_init() {
        let v = Vocabulary::from_words(["a"]).unwrap();
        let m = init_learnt(&v, 4, 7);
        assert!(m.table.row(0).iter().all(|&x| x == 0.0));
        assert!(m.table.data()[4..].iter().all(|&x| x.abs() < 0.05 && x != 0.0));
        assert_eq!(m, init_learnt(&v, 4, 7));
        let big = init_learnt(&v, 100, 1);
        assert!(big.table.row(0).iter().all(|&x| x == 0.0));
    }

    #[test]
    fn embed_rows() {
        let v = Vocabulary::from_words(["a", "b"]).unwrap();
        let m = init_learnt(&v, 3, 1);
        let pads = embed(&[PAD; 4], &v, &m);
        assert!(pads.data().iter().all(|&x| x == 0.0));
        let e = embed(&["b", "zzz", "a"], &v, &m);
        assert_eq!(e.row(0), m.table.row(3));
        assert_eq!(e.row(1), m.table.row(UNK_ID));
        assert_eq!(e.row(2), m.table.row(2));
    }

    #[test]
    fn dump_load_round_trip() {
        let v = Vocabulary::from_words(["a", "b", "c"]).unwrap();
        let m = init_learnt(&v, 5, 3);
        let mut buf = Vec::new();
        dump_glove(&mut buf, &v, &m).unwrap();
        let back = load_glove(&buf[..], "dump", &v, 5, true).unwrap();
        assert_eq!(back.matrix.table, m.table);
        assert_eq!(back.coverage, 1.0);
    }
}
