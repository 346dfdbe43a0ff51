//! The five subcommands. Each reads all of its inputs, computes every
//! output in memory, and only then writes them.

use std::fs::{self, File};
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::data::{read_tsv, LabeledTweet, Task};
use crate::embeddings::{build_vocab, init_learnt, load_glove, randomize_unk, EmbeddingMatrix, Vocabulary};
use crate::error::{Error, Result};
use crate::metrics::{report, ConfusionMatrix};
use crate::models::{Classifier, Head, Network};
use crate::neural::EmbeddingLayer;
use crate::spell::{DictionaryConfig, FrequencyDictionary};
use crate::textnorm::{histogram_csv, pad_or_truncate, sentence_length_histogram, Pipeline, PipelineConfig, PAD};
use crate::training::{evaluate, hierarchical_filter, history_csv, stratified_split, train, Example, TrainOutcome};

use super::config::{EmbeddingSource, RunConfig};
use super::container::ModelContainer;

/// Salt separating the embedding initialisation stream from the network's.
const EMBEDDING_SEED_SALT: u64 = 0x5EED_E3B0_0000_0001;

pub const MODEL_FILE: &str = "model.otc";
pub const HISTORY_FILE: &str = "history.csv";
pub const REPORT_FILE: &str = "validation_report.txt";
pub const DICTIONARY_FILE: &str = "dictionary.txt";

/// Output files held in memory until [`Staged::commit`].
#[derive(Debug, Default)]
pub struct Staged {
    files: Vec<(PathBuf, Vec<u8>)>,
}

impl Staged {
    pub fn add(&mut self, dest: impl Into<PathBuf>, bytes: impl Into<Vec<u8>>) {
        self.files.push((dest.into(), bytes.into()));
    }

    /// Writes each file to a temporary sibling, then renames all of them
    /// into place.
    pub fn commit(self) -> Result<Vec<PathBuf>> {
        let mut pending = Vec::with_capacity(self.files.len());
        for (dest, bytes) in &self.files {
            let dir = match dest.parent() {
                Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
                _ => PathBuf::from("."),
            };
            fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
            let mut tmp = temp_builder().tempfile_in(&dir).map_err(|e| Error::io(&dir, e))?;
            tmp.write_all(bytes).map_err(|e| Error::io(dest, e))?;
            tmp.as_file().sync_all().map_err(|e| Error::io(dest, e))?;
            pending.push((tmp, dest.clone()));
        }
        let mut written = Vec::with_capacity(pending.len());
        for (tmp, dest) in pending {
            tmp.persist(&dest).map_err(|e| Error::io(&dest, e.error))?;
            written.push(dest);
        }
        Ok(written)
    }
}

#[cfg(unix)]
fn temp_builder() -> tempfile::Builder<'static, 'static> {
    use std::os::unix::fs::PermissionsExt;
    let mut b = tempfile::Builder::new();
    b.permissions(fs::Permissions::from_mode(0o644));
    b
}

#[cfg(not(unix))]
fn temp_builder() -> tempfile::Builder<'static, 'static> {
    tempfile::Builder::new()
}

fn source_name(path: &Path) -> String {
    path.display().to_string()
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| Error::io(path, e))
}

pub fn read_tweets(path: &Path) -> Result<Vec<LabeledTweet>> {
    read_tsv(open(path)?, &source_name(path))
}

pub fn read_dictionary(path: &Path) -> Result<FrequencyDictionary> {
    FrequencyDictionary::read_from(open(path)?, &source_name(path), DictionaryConfig::default())
}

/// Rows carrying a label for `task`, with their class indices.
pub fn labelled_rows(path: &Path, task: Task) -> Result<(Vec<LabeledTweet>, Vec<usize>)> {
    let rows = hierarchical_filter(&read_tweets(path)?, task);
    let labels = rows
        .iter()
        .map(|t| {
            task.class_of(t).ok_or_else(|| {
                Error::Data(format!(
                    "{}: tweet {} has no task {task} label",
                    source_name(path),
                    t.id
                ))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((rows, labels))
}

fn pipeline(max_len: usize, dict: Option<FrequencyDictionary>) -> Pipeline {
    Pipeline::new(PipelineConfig::default().with_pad_length(max_len), dict)
}

/// Normalized, unpadded tokens for every tweet, computed in parallel.
fn normalize_all(pipeline: &Pipeline, rows: &[LabeledTweet]) -> Vec<Vec<String>> {
    rows.par_iter().map(|t| pipeline.normalize(&t.text)).collect()
}

fn padded(tokens: &[Vec<String>], len: usize) -> Vec<Vec<String>> {
    tokens.iter().map(|t| pad_or_truncate(t, len)).collect()
}

fn hash_line(hash: Option<&str>) -> String {
    format!("# dictionary = {}\n", hash.unwrap_or("none"))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PreprocessArgs {
    pub input: PathBuf,
    pub dict: Option<PathBuf>,
    pub output: PathBuf,
    pub histogram: Option<PathBuf>,
    pub max_len: usize,
}

/// Writes one space-joined normalized tweet per input row and, optionally,
/// the `length,count` histogram of unpadded lengths. Returns the row count.
pub fn cmd_preprocess(args: &PreprocessArgs) -> Result<usize> {
    if args.max_len == 0 {
        return Err(Error::Usage("maximum length must be positive".into()));
    }
    let rows = read_tweets(&args.input)?;
    let dict = args.dict.as_deref().map(read_dictionary).transpose()?;
    let hash = dict.as_ref().map(FrequencyDictionary::content_hash);
    let p = pipeline(args.max_len, dict);
    let tokens = normalize_all(&p, &rows);
    let mut corpus = String::new();
    for seq in padded(&tokens, args.max_len) {
        corpus.push_str(&seq.join(" "));
        corpus.push('\n');
    }
    let mut staged = Staged::default();
    staged.add(&args.output, corpus);
    if let Some(h) = &args.histogram {
        let text = format!(
            "# max_len = {}\n{}{}",
            args.max_len,
            hash_line(hash.as_deref()),
            histogram_csv(&sentence_length_histogram(&tokens))
        );
        staged.add(h, text);
    }
    staged.commit()?;
    Ok(rows.len())
}

/// Builds a `word count` dictionary from a whitespace-tokenized corpus,
/// one tweet per line; padding tokens are ignored. Returns the word count.
pub fn cmd_build_dict(corpus: &Path, min_count: u64, out: &Path) -> Result<usize> {
    if min_count == 0 {
        return Err(Error::Usage("minimum count must be positive".into()));
    }
    let text = fs::read_to_string(corpus).map_err(|e| Error::io(corpus, e))?;
    let lines: Vec<Vec<&str>> = text
        .lines()
        .map(|l| l.split_whitespace().filter(|t| *t != PAD).collect())
        .collect();
    let dict = FrequencyDictionary::build(&lines, min_count, DictionaryConfig::default());
    let mut staged = Staged::default();
    staged.add(out, dict.to_text());
    staged.commit()?;
    Ok(dict.len())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainArgs {
    pub train: PathBuf,
    pub out_dir: PathBuf,
    pub dict: Option<PathBuf>,
    pub retrain_full: bool,
}

#[derive(Debug, Clone)]
pub struct TrainSummary {
    pub outcome: TrainOutcome,
    pub validation: Option<ConfusionMatrix>,
    pub written: Vec<PathBuf>,
}

fn embedding_matrix(config: &RunConfig, vocab: &Vocabulary) -> Result<EmbeddingMatrix> {
    let seed = config.seed ^ EMBEDDING_SEED_SALT;
    let mut m = match &config.embedding {
        EmbeddingSource::Learnt => init_learnt(vocab, config.embedding_dim, seed),
        EmbeddingSource::Glove(path) => {
            let mut m = load_glove(open(path)?, &source_name(path), vocab, config.embedding_dim, true)?.matrix;
            randomize_unk(&mut m, seed);
            m
        }
    };
    m.trainable = config.embedding_trainable;
    Ok(m)
}

fn fresh_classifier(config: &RunConfig, corpus: &[Vec<String>]) -> Result<Classifier<f32>> {
    let vocab = build_vocab(corpus, config.min_count);
    let matrix = embedding_matrix(config, &vocab)?;
    let network = Network::build(config.model, Head::for_task(config.task), config.hyper(), config.seed)?;
    Classifier::new(
        config.task,
        vocab,
        EmbeddingLayer::new(matrix.table, matrix.trainable),
        network,
    )
}

fn examples(model: &Classifier<f32>, tokens: &[Vec<String>], labels: &[usize], idx: &[usize]) -> Vec<Example> {
    idx.iter()
        .map(|&i| Example {
            ids: model.encode(&tokens[i]),
            label: labels[i],
        })
        .collect()
}

/// Table-row summary, per-class scores and the confusion matrix.
pub fn render_report(config: &RunConfig, dictionary_hash: Option<&str>, cm: &ConfusionMatrix) -> String {
    let names = config.task.class_names();
    format!(
        "{}{}model,task,macro_f1,accuracy\n{},{},{:.4},{:.4}\n\n{}\n{}",
        config.echo(),
        hash_line(dictionary_hash),
        config.model,
        config.task,
        cm.macro_f1(),
        cm.accuracy(),
        report(cm, names),
        cm.render_csv(names)
    )
}

/// Trains on a stratified split, reports on the held-out part, and writes
/// the model container, history, report and (when built here) dictionary
/// into `out_dir`. With `retrain_full` the saved model is retrained on all
/// rows for the best holdout epoch count.
pub fn cmd_train(config: &RunConfig, args: &TrainArgs) -> Result<TrainSummary> {
    config.hyper().shapes(config.model).map_err(|e| match e {
        Error::Shape(m) => Error::Usage(format!("{} cannot be built: {m}", config.model)),
        other => other,
    })?;
    let (rows, labels) = labelled_rows(&args.train, config.task)?;
    let (dict, built) = match &args.dict {
        Some(path) => (read_dictionary(path)?, false),
        None => {
            let plain = normalize_all(&pipeline(config.max_sequence_length, None), &rows);
            (
                FrequencyDictionary::build(&plain, config.dict_min_count, DictionaryConfig::default()),
                true,
            )
        }
    };
    let hash = dict.content_hash();
    let dict_text = built.then(|| dict.to_text());
    let tokens = padded(
        &normalize_all(&pipeline(config.max_sequence_length, Some(dict)), &rows),
        config.max_sequence_length,
    );

    let (train_idx, val_idx) = stratified_split(&labels, &config.split_spec())?;
    if train_idx.is_empty() {
        return Err(Error::Data(format!(
            "{}: no training rows for task {}",
            source_name(&args.train),
            config.task
        )));
    }
    let train_tokens: Vec<Vec<String>> = train_idx.iter().map(|&i| tokens[i].clone()).collect();
    let mut model = fresh_classifier(config, &train_tokens)?;
    let train_set = examples(&model, &tokens, &labels, &train_idx);
    let val_set = examples(&model, &tokens, &labels, &val_idx);
    let train_cfg = config.train_config();
    let outcome = train(&mut model, &train_set, &val_set, &train_cfg)?;
    let validation = if val_set.is_empty() {
        None
    } else {
        Some(evaluate(&model, &val_set)?)
    };

    if args.retrain_full {
        let all: Vec<usize> = (0..rows.len()).collect();
        model = fresh_classifier(config, &tokens)?;
        let full_set = examples(&model, &tokens, &labels, &all);
        let mut full_cfg = train_cfg.clone();
        full_cfg.epochs = outcome.best_epoch.max(1);
        train(&mut model, &full_set, &[], &full_cfg)?;
    }

    let container = ModelContainer {
        config: config.clone(),
        dictionary_hash: Some(hash.clone()),
        model,
    };
    let out = &args.out_dir;
    let mut staged = Staged::default();
    staged.add(out.join(MODEL_FILE), container.to_bytes());
    staged.add(
        out.join(HISTORY_FILE),
        format!(
            "{}{}{}",
            config.echo(),
            hash_line(Some(&hash)),
            history_csv(&outcome.history)
        ),
    );
    let report_text = match &validation {
        Some(cm) => render_report(config, Some(&hash), cm),
        None => format!("{}{}no validation rows\n", config.echo(), hash_line(Some(&hash))),
    };
    staged.add(out.join(REPORT_FILE), report_text);
    if let Some(text) = dict_text {
        staged.add(out.join(DICTIONARY_FILE), text);
    }
    let written = staged.commit()?;
    Ok(TrainSummary {
        outcome,
        validation,
        written,
    })
}

pub fn load_model(path: &Path) -> Result<ModelContainer> {
    ModelContainer::read_from(open(path)?, &source_name(path))
}

/// The dictionary a container was preprocessed with, checked by hash.
fn matching_dictionary(container: &ModelContainer, dict: Option<&Path>) -> Result<Option<FrequencyDictionary>> {
    match (&container.dictionary_hash, dict) {
        (None, None) => Ok(None),
        (None, Some(_)) => Err(Error::Usage(
            "this model was trained without a dictionary; drop --dict".into(),
        )),
        (Some(h), None) => Err(Error::Usage(format!(
            "this model needs the dictionary it was trained with (sha256 {h}); pass --dict"
        ))),
        (Some(h), Some(path)) => {
            let d = read_dictionary(path)?;
            let found = d.content_hash();
            if &found != h {
                return Err(Error::Data(format!(
                    "{}: dictionary sha256 {found} does not match the model's {h}",
                    source_name(path)
                )));
            }
            Ok(Some(d))
        }
    }
}

fn encode_rows(
    container: &ModelContainer,
    dict: Option<FrequencyDictionary>,
    rows: &[LabeledTweet],
) -> Vec<Vec<usize>> {
    let len = container.config.max_sequence_length;
    padded(&normalize_all(&pipeline(len, dict), rows), len)
        .iter()
        .map(|t| container.model.encode(t))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelIo {
    pub model: PathBuf,
    pub input: PathBuf,
    pub dict: Option<PathBuf>,
    pub output: Option<PathBuf>,
}

/// Scores the model on a labelled TSV. Returns the confusion matrix and
/// the report text, which is also written to `output` when given.
pub fn cmd_evaluate(args: &ModelIo) -> Result<(ConfusionMatrix, String)> {
    let container = load_model(&args.model)?;
    let dict = matching_dictionary(&container, args.dict.as_deref())?;
    let task = container.config.task;
    let (rows, labels) = labelled_rows(&args.input, task)?;
    let ids = encode_rows(&container, dict, &rows);
    let set: Vec<Example> = ids
        .into_iter()
        .zip(labels)
        .map(|(ids, label)| Example { ids, label })
        .collect();
    let cm = evaluate(&container.model, &set)?;
    let text = render_report(&container.config, container.dictionary_hash.as_deref(), &cm);
    if let Some(out) = &args.output {
        let mut staged = Staged::default();
        staged.add(out, text.clone());
        staged.commit()?;
    }
    Ok((cm, text))
}

pub const PREDICTION_HEADER: &str = "id\tlabel\tprobability";

/// `id \t label \t probability` for every input row, where the probability
/// is the model's probability of the predicted label.
pub fn cmd_predict(args: &ModelIo) -> Result<String> {
    let container = load_model(&args.model)?;
    let dict = matching_dictionary(&container, args.dict.as_deref())?;
    let rows = read_tweets(&args.input)?;
    let ids = encode_rows(&container, dict, &rows);
    let head = container.model.head();
    let names = container.config.task.class_names();
    let mut out = format!(
        "{}{}{PREDICTION_HEADER}\n",
        container.config.echo(),
        hash_line(container.dictionary_hash.as_deref())
    );
    for (row, x) in rows.iter().zip(&ids) {
        let probs = container.model.predict_proba(x)?;
        let label = head.decide(&probs);
        out.push_str(&format!(
            "{}\t{}\t{:.6}\n",
            row.id,
            names[label],
            head.class_prob(&probs, label)
        ));
    }
    if let Some(path) = &args.output {
        let mut staged = Staged::default();
        staged.add(path, out.clone());
        staged.commit()?;
    }
    Ok(out)
}
