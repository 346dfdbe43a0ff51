//! Run configuration: flat `KEY = value` text, layered defaults < file < flags.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::data::Task;
use crate::error::{Error, Result};
use crate::models::{Hyper, Variant};
use crate::neural::AdamConfig;
use crate::training::{SplitSpec, TrainConfig, WeightMode};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EmbeddingSource {
    Learnt,
    Glove(PathBuf),
}

impl fmt::Display for EmbeddingSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EmbeddingSource::Learnt => f.write_str("learnt"),
            EmbeddingSource::Glove(p) => write!(f, "glove:{}", p.display()),
        }
    }
}

impl FromStr for EmbeddingSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("learnt") || s.eq_ignore_ascii_case("learned") {
            return Ok(EmbeddingSource::Learnt);
        }
        match s.strip_prefix("glove:") {
            Some(path) if !path.is_empty() => Ok(EmbeddingSource::Glove(PathBuf::from(path))),
            _ => Err(Error::Usage(format!(
                "embedding must be `learnt` or `glove:<path>`, got {s:?}"
            ))),
        }
    }
}

/// Every setting of a training run. The defaults are the published
/// hyperparameter block plus the architecture constants.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub task: Task,
    pub model: Variant,
    pub lr: f64,
    pub lr_decay: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub dropout: f64,
    pub bidirectional: bool,
    pub recurrent_units: usize,
    pub embedding: EmbeddingSource,
    pub embedding_dim: usize,
    pub embedding_trainable: bool,
    pub max_sequence_length: usize,
    pub filters: usize,
    pub kernel_size: usize,
    pub pool_size: usize,
    pub class_weighting: WeightMode,
    pub validation_split: f64,
    pub window: usize,
    pub patience: usize,
    pub min_count: u64,
    pub dict_min_count: u64,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let hyper = Hyper::default();
        let train = TrainConfig::default();
        RunConfig {
            task: Task::A,
            model: Variant::Bilstm,
            lr: train.adam.lr,
            lr_decay: train.adam.decay,
            epochs: train.epochs,
            batch_size: train.batch_size,
            dropout: hyper.dropout,
            bidirectional: hyper.bidirectional,
            recurrent_units: hyper.units,
            embedding: EmbeddingSource::Learnt,
            embedding_dim: hyper.embed_dim,
            embedding_trainable: true,
            max_sequence_length: hyper.seq_len,
            filters: hyper.filters,
            kernel_size: hyper.conv_width,
            pool_size: hyper.pool,
            class_weighting: train.weighting,
            validation_split: 0.2,
            window: train.window,
            patience: train.patience,
            min_count: 1,
            dict_min_count: 1,
            seed: 0,
        }
    }
}

/// Recognised keys in rendering order.
pub const KEYS: [&str; 23] = [
    "TASK",
    "MODEL",
    "LR",
    "LR_DECAY",
    "EPOCHS",
    "BATCH_SIZE",
    "DROPOUT",
    "BIDIRECTIONAL",
    "RECURRENT_UNITS",
    "EMBEDDING",
    "EMBEDDING_DIM",
    "EMBEDDING_TRAINABLE",
    "MAX_SEQUENCE_LENGTH",
    "FILTERS",
    "KERNEL_SIZE",
    "POOL_SIZE",
    "CLASS_WEIGHTING",
    "VALIDATION_SPLIT",
    "WINDOW",
    "PATIENCE",
    "MIN_COUNT",
    "DICT_MIN_COUNT",
    "SEED",
];

fn parse_bool(v: &str) -> Option<bool> {
    match v.to_ascii_lowercase().as_str() {
        "true" | "1" | "yes" => Some(true),
        "false" | "0" | "no" => Some(false),
        _ => None,
    }
}

fn render_bool(b: bool) -> &'static str {
    if b {
        "True"
    } else {
        "False"
    }
}

fn number<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::Usage(format!("{key}: invalid value {v:?}")))
}

fn positive(key: &str, v: &str) -> Result<usize> {
    match number::<usize>(key, v)? {
        0 => Err(Error::Usage(format!("{key} must be positive"))),
        n => Ok(n),
    }
}

fn unit_interval(key: &str, v: &str, open_top: bool) -> Result<f64> {
    let x: f64 = number(key, v)?;
    let ok = x >= 0.0 && if open_top { x < 1.0 } else { x <= 1.0 };
    if !ok {
        return Err(Error::Usage(format!("{key} = {x} is out of range")));
    }
    Ok(x)
}

fn non_negative(key: &str, v: &str) -> Result<f64> {
    let x: f64 = number(key, v)?;
    if !x.is_finite() || x < 0.0 {
        return Err(Error::Usage(format!("{key} must be a non-negative number")));
    }
    Ok(x)
}

impl RunConfig {
    /// Sets one key; keys are case-insensitive.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let k = key.trim().to_ascii_uppercase();
        let v = value.trim();
        match k.as_str() {
            "TASK" => self.task = v.parse()?,
            "MODEL" => self.model = v.parse()?,
            "LR" => {
                self.lr = non_negative(&k, v)?;
                if self.lr == 0.0 {
                    return Err(Error::Usage("LR must be positive".into()));
                }
            }
            "LR_DECAY" => self.lr_decay = non_negative(&k, v)?,
            "EPOCHS" => self.epochs = positive(&k, v)?,
            "BATCH_SIZE" => self.batch_size = positive(&k, v)?,
            "DROPOUT" => self.dropout = unit_interval(&k, v, true)?,
            "BIDIRECTIONAL" => {
                self.bidirectional =
                    parse_bool(v).ok_or_else(|| Error::Usage(format!("{k}: expected True or False, got {v:?}")))?
            }
            "RECURRENT_UNITS" => self.recurrent_units = positive(&k, v)?,
            "EMBEDDING" => self.embedding = v.parse()?,
            "EMBEDDING_DIM" => self.embedding_dim = positive(&k, v)?,
            "EMBEDDING_TRAINABLE" => {
                self.embedding_trainable =
                    parse_bool(v).ok_or_else(|| Error::Usage(format!("{k}: expected True or False, got {v:?}")))?
            }
            "MAX_SEQUENCE_LENGTH" => self.max_sequence_length = positive(&k, v)?,
            "FILTERS" => self.filters = positive(&k, v)?,
            "KERNEL_SIZE" => self.kernel_size = positive(&k, v)?,
            "POOL_SIZE" => self.pool_size = positive(&k, v)?,
            "CLASS_WEIGHTING" => self.class_weighting = v.parse()?,
            "VALIDATION_SPLIT" => self.validation_split = unit_interval(&k, v, true)?,
            "WINDOW" => self.window = positive(&k, v)?,
            "PATIENCE" => self.patience = positive(&k, v)?,
            "MIN_COUNT" => self.min_count = positive(&k, v)? as u64,
            "DICT_MIN_COUNT" => self.dict_min_count = positive(&k, v)? as u64,
            "SEED" => self.seed = number(&k, v)?,
            _ => return Err(Error::Usage(format!("unknown configuration key {key:?}"))),
        }
        Ok(())
    }

    /// Parses `KEY=VALUE` as given on the command line.
    pub fn set_assignment(&mut self, assignment: &str) -> Result<()> {
        let (k, v) = assignment
            .split_once('=')
            .ok_or_else(|| Error::Usage(format!("expected KEY=VALUE, got {assignment:?}")))?;
        self.set(k, v)
    }

    /// Applies a config file: one `KEY = value` per line, `#` comments and
    /// blank lines ignored.
    pub fn apply_text(&mut self, text: &str, source_name: &str) -> Result<()> {
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let located = |e: Error| Error::Usage(format!("{source_name}:{}: {}", idx + 1, strip_usage(e)));
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Usage(format!("expected `KEY = value`, got {line:?}")))
                .map_err(located)?;
            self.set(k, v).map_err(located)?;
        }
        Ok(())
    }

    pub fn from_text(text: &str, source_name: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        cfg.apply_text(text, source_name)?;
        Ok(cfg)
    }

    pub fn get(&self, key: &str) -> Option<String> {
        Some(match key {
            "TASK" => self.task.to_string(),
            "MODEL" => self.model.to_string(),
            "LR" => self.lr.to_string(),
            "LR_DECAY" => self.lr_decay.to_string(),
            "EPOCHS" => self.epochs.to_string(),
            "BATCH_SIZE" => self.batch_size.to_string(),
            "DROPOUT" => self.dropout.to_string(),
            "BIDIRECTIONAL" => render_bool(self.bidirectional).into(),
            "RECURRENT_UNITS" => self.recurrent_units.to_string(),
            "EMBEDDING" => self.embedding.to_string(),
            "EMBEDDING_DIM" => self.embedding_dim.to_string(),
            "EMBEDDING_TRAINABLE" => render_bool(self.embedding_trainable).into(),
            "MAX_SEQUENCE_LENGTH" => self.max_sequence_length.to_string(),
            "FILTERS" => self.filters.to_string(),
            "KERNEL_SIZE" => self.kernel_size.to_string(),
            "POOL_SIZE" => self.pool_size.to_string(),
            "CLASS_WEIGHTING" => self.class_weighting.to_string(),
            "VALIDATION_SPLIT" => self.validation_split.to_string(),
            "WINDOW" => self.window.to_string(),
            "PATIENCE" => self.patience.to_string(),
            "MIN_COUNT" => self.min_count.to_string(),
            "DICT_MIN_COUNT" => self.dict_min_count.to_string(),
            "SEED" => self.seed.to_string(),
            _ => return None,
        })
    }

    /// Aligned `KEY = value` lines in [`KEYS`] order; parses back to `self`.
    pub fn to_text(&self) -> String {
        let width = KEYS.iter().map(|k| k.len()).max().unwrap_or(0);
        KEYS.iter()
            .map(|k| format!("{k:<width$} = {}\n", self.get(k).expect("every key renders")))
            .collect()
    }

    /// [`Self::to_text`] with every line prefixed by `# `.
    pub fn echo(&self) -> String {
        self.to_text().lines().map(|l| format!("# {l}\n")).collect()
    }

    pub fn hyper(&self) -> Hyper {
        Hyper {
            seq_len: self.max_sequence_length,
            embed_dim: self.embedding_dim,
            units: self.recurrent_units,
            dropout: self.dropout,
            bidirectional: self.bidirectional,
            conv_width: self.kernel_size,
            filters: self.filters,
            pool: self.pool_size,
            pool_stride: self.pool_size,
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            batch_size: self.batch_size,
            adam: AdamConfig {
                lr: self.lr,
                decay: self.lr_decay,
                ..AdamConfig::default()
            },
            weighting: self.class_weighting,
            window: self.window,
            patience: self.patience,
            seed: self.seed,
        }
    }

    pub fn split_spec(&self) -> SplitSpec {
        SplitSpec {
            train_fraction: 1.0 - self.validation_split,
            stratified: true,
            seed: self.seed,
        }
    }
}

fn strip_usage(e: Error) -> String {
    match e {
        Error::Usage(m) => m,
        other => other.to_string(),
    }
}
