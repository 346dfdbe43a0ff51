//! Single-file model container: a text header (config, vocabulary,
//! dictionary hash, tensor table) followed by little-endian `f32` blocks.

use std::io::{BufRead, Write};

use crate::embeddings::Vocabulary;
use crate::error::{Error, Result};
use crate::models::{Classifier, Head, Network};
use crate::neural::{EmbeddingLayer, HasParams, Tensor2};

use super::config::RunConfig;

pub const MAGIC: &str = "OFFTWEET-MODEL";
pub const VERSION: u32 = 1;

/// A trained classifier with the settings it was built from.
#[derive(Debug, Clone)]
pub struct ModelContainer {
    pub config: RunConfig,
    /// Hex SHA-256 of the spelling dictionary used during preprocessing.
    pub dictionary_hash: Option<String>,
    pub model: Classifier<f32>,
}

/// A freshly initialised classifier for `config` over `vocab`, with an
/// all-zero embedding table.
pub fn blank_classifier(config: &RunConfig, vocab: Vocabulary) -> Result<Classifier<f32>> {
    let network = Network::build(config.model, Head::for_task(config.task), config.hyper(), config.seed)?;
    let table = Tensor2::zeros(vocab.len(), config.embedding_dim);
    Classifier::new(
        config.task,
        vocab,
        EmbeddingLayer::new(table, config.embedding_trainable),
        network,
    )
}

impl ModelContainer {
    pub fn write_to<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let config = self.config.to_text();
        let words = self.model.vocab.words();
        let params = self.model.params();
        writeln!(out, "{MAGIC}")?;
        writeln!(out, "version {VERSION}")?;
        writeln!(out, "config {}", config.lines().count())?;
        out.write_all(config.as_bytes())?;
        writeln!(out, "vocab {}", words.len())?;
        for w in words {
            writeln!(out, "{w}")?;
        }
        writeln!(out, "dictionary {}", self.dictionary_hash.as_deref().unwrap_or("none"))?;
        writeln!(out, "tensors {}", params.len())?;
        for p in &params {
            let (r, c) = p.value.shape();
            writeln!(out, "{} {r} {c}", p.name)?;
        }
        writeln!(out, "end")?;
        for p in &params {
            let mut buf = Vec::with_capacity(p.len() * 4);
            for v in p.value.data() {
                buf.extend_from_slice(&v.to_le_bytes());
            }
            out.write_all(&buf)?;
        }
        out.flush()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to a Vec cannot fail");
        buf
    }

    pub fn read_from<R: BufRead>(mut reader: R, source_name: &str) -> Result<Self> {
        let mut header = HeaderReader {
            reader: &mut reader,
            source_name,
            line_no: 0,
        };
        let magic = header.line()?;
        if magic != MAGIC {
            return Err(header.error("not a model container"));
        }
        let version: u32 = header.field("version")?;
        if version != VERSION {
            return Err(header.error(&format!("unsupported container version {version}")));
        }
        let n_config: usize = header.field("config")?;
        let mut config_text = String::new();
        for _ in 0..n_config {
            config_text.push_str(&header.line()?);
            config_text.push('\n');
        }
        let config = RunConfig::from_text(&config_text, source_name)
            .map_err(|e| header.error(&format!("bad config snapshot: {e}")))?;
        let n_vocab: usize = header.field("vocab")?;
        let mut words = Vec::with_capacity(n_vocab);
        for _ in 0..n_vocab {
            words.push(header.line()?);
        }
        if n_vocab < 2 {
            return Err(header.error("vocabulary lacks the reserved entries"));
        }
        let vocab = Vocabulary::from_words(words.into_iter().skip(2)).map_err(|e| header.error(&e.to_string()))?;
        let dictionary_hash = match header.field::<String>("dictionary")?.as_str() {
            "none" => None,
            h => Some(h.to_owned()),
        };
        let n_tensors: usize = header.field("tensors")?;
        let mut table = Vec::with_capacity(n_tensors);
        for _ in 0..n_tensors {
            let line = header.line()?;
            let parts: Vec<&str> = line.split(' ').collect();
            let parsed = match parts.as_slice() {
                [name, r, c] => r
                    .parse::<usize>()
                    .ok()
                    .zip(c.parse::<usize>().ok())
                    .map(|rc| (name.to_string(), rc)),
                _ => None,
            };
            table.push(parsed.ok_or_else(|| header.error("expected `name rows cols`"))?);
        }
        if header.line()? != "end" {
            return Err(header.error("expected `end`"));
        }
        let header_lines = header.line_no;

        let mut model = blank_classifier(&config, vocab)
            .map_err(|e| Error::parse(source_name, header_lines, format!("config does not build: {e}")))?;
        let mut params = model.params_mut();
        if params.len() != table.len() {
            return Err(Error::parse(
                source_name,
                header_lines,
                format!("{} tensors stored but the model has {}", table.len(), params.len()),
            ));
        }
        for (p, (name, (r, c))) in params.iter_mut().zip(&table) {
            if &p.name != name || p.value.shape() != (*r, *c) {
                let (er, ec) = p.value.shape();
                return Err(Error::parse(
                    source_name,
                    header_lines,
                    format!("tensor {name} {r}x{c} does not match expected {} {er}x{ec}", p.name),
                ));
            }
            let mut bytes = vec![0u8; r * c * 4];
            reader
                .read_exact(&mut bytes)
                .map_err(|_| Error::Data(format!("{source_name}: truncated tensor data for {name}")))?;
            for (dst, chunk) in p.value.data_mut().iter_mut().zip(bytes.chunks_exact(4)) {
                *dst = f32::from_le_bytes(chunk.try_into().expect("chunks of four bytes"));
            }
        }
        let mut rest = [0u8; 1];
        if reader.read(&mut rest).map_err(|e| Error::io(source_name, e))? != 0 {
            return Err(Error::Data(format!("{source_name}: trailing bytes after tensor data")));
        }
        drop(params);
        Ok(ModelContainer {
            config,
            dictionary_hash,
            model,
        })
    }
}

struct HeaderReader<'a, R> {
    reader: &'a mut R,
    source_name: &'a str,
    line_no: usize,
}

impl<R: BufRead> HeaderReader<'_, R> {
    fn error(&self, message: &str) -> Error {
        Error::parse(self.source_name, self.line_no, message)
    }

    fn line(&mut self) -> Result<String> {
        let mut buf = Vec::new();
        self.line_no += 1;
        let n = self
            .reader
            .read_until(b'\n', &mut buf)
            .map_err(|e| Error::io(self.source_name, e))?;
        if n == 0 || buf.last() != Some(&b'\n') {
            return Err(self.error("unexpected end of header"));
        }
        buf.pop();
        String::from_utf8(buf).map_err(|_| self.error("header is not UTF-8"))
    }

    fn field<T: std::str::FromStr>(&mut self, key: &str) -> Result<T> {
        let line = self.line()?;
        line.strip_prefix(key)
            .and_then(|rest| rest.strip_prefix(' '))
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| self.error(&format!("expected `{key} <value>`")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::Variant;
    use crate::neural::init::uniform_limit;
    use rand::SeedableRng;

    fn sample(variant: Variant) -> ModelContainer {
        let config = RunConfig {
            model: variant,
            max_sequence_length: 8,
            embedding_dim: 6,
            recurrent_units: 3,
            filters: 2,
            kernel_size: 2,
            pool_size: 2,
            seed: 4,
            ..RunConfig::default()
        };
        let vocab = Vocabulary::from_words(["hello", "world"]).unwrap();
        let mut model = blank_classifier(&config, vocab).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        model.embedding = EmbeddingLayer::new(uniform_limit(4, 6, 0.5, &mut rng), true);
        ModelContainer {
            config,
            dictionary_hash: Some("ab".repeat(32)),
            model,
        }
    }

    #[test]
    fn round_trip_is_bit_exact() {
        for v in Variant::ALL {
            let c = sample(v);
            let bytes = c.to_bytes();
            let back = ModelContainer::read_from(bytes.as_slice(), "m").unwrap();
            assert_eq!(back.config, c.config);
            assert_eq!(back.dictionary_hash, c.dictionary_hash);
            assert_eq!(back.model.vocab, c.model.vocab);
            for (a, b) in c.model.params().iter().zip(back.model.params()) {
                let bits = |t: &Tensor2<f32>| t.data().iter().map(|x| x.to_bits()).collect::<Vec<_>>();
                assert_eq!(bits(&a.value), bits(&b.value), "{}", a.name);
            }
            assert_eq!(back.to_bytes(), bytes);
            let probe = [2, 3, 1, 0, 0, 0, 0, 0];
            let pa = c.model.predict_proba(&probe).unwrap();
            let pb = back.model.predict_proba(&probe).unwrap();
            assert_eq!(
                pa.iter().map(|x| x.to_bits()).collect::<Vec<_>>(),
                pb.iter().map(|x| x.to_bits()).collect::<Vec<_>>()
            );
        }
    }

    #[test]
    fn rejects_damage() {
        let bytes = sample(Variant::Bilstm).to_bytes();
        assert!(ModelContainer::read_from(&b"garbage\n"[..], "m").is_err());
        assert!(ModelContainer::read_from(&bytes[..bytes.len() - 3], "m").is_err());
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(ModelContainer::read_from(extra.as_slice(), "m").is_err());
        let text = String::from_utf8_lossy(&bytes).replace("version 1", "version 9");
        let err = ModelContainer::read_from(text.as_bytes(), "m").unwrap_err();
        assert!(err.to_string().contains("m:2:"), "{err}");
    }
}
