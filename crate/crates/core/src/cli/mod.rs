//! Command-line surface: argument parsing, configuration layering, the
//! model container and the five subcommands.

pub mod commands;
pub mod config;
pub mod container;

use std::ffi::OsString;
use std::fs;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::textnorm::DEFAULT_PAD_LENGTH;

pub use commands::{
    cmd_build_dict, cmd_evaluate, cmd_predict, cmd_preprocess, cmd_train, ModelIo, PreprocessArgs, TrainArgs,
    TrainSummary,
};
pub use config::{EmbeddingSource, RunConfig};
pub use container::ModelContainer;

#[derive(Debug, Parser)]
#[command(name = "offtweet", version, about = "Offensive tweet classification toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Normalize an OLID-layout TSV into one token line per tweet.
    Preprocess {
        #[arg(long)]
        input: PathBuf,
        /// Spelling dictionary enabling segmentation and correction.
        #[arg(long)]
        dict: Option<PathBuf>,
        #[arg(long)]
        output: PathBuf,
        /// Where to write the `length,count` histogram of unpadded lengths.
        #[arg(long)]
        histogram: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_PAD_LENGTH)]
        max_len: usize,
    },
    /// Build a `word count` dictionary from a normalized corpus.
    BuildDict {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value_t = 1)]
        min_count: u64,
        #[arg(long)]
        output: PathBuf,
    },
    /// Train a classifier and write the model, history and validation report.
    Train(TrainCmd),
    /// Score a saved model on a labelled TSV.
    Evaluate(ModelCmd),
    /// Label every row of a TSV with a saved model.
    Predict(ModelCmd),
}

#[derive(Debug, Args)]
pub struct TrainCmd {
    /// Labelled OLID-layout TSV.
    #[arg(long)]
    pub train: PathBuf,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// `KEY = value` configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Spelling dictionary; built from the training tweets when absent.
    #[arg(long)]
    pub dict: Option<PathBuf>,
    #[arg(long)]
    pub task: Option<String>,
    #[arg(long)]
    pub model: Option<String>,
    /// `learnt` or `glove:<path>`.
    #[arg(long)]
    pub embedding: Option<String>,
    #[arg(long)]
    pub epochs: Option<String>,
    #[arg(long)]
    pub batch_size: Option<String>,
    #[arg(long)]
    pub lr: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    /// Any configuration key, as `KEY=VALUE`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Retrain on every row for the best holdout epoch count before saving.
    #[arg(long)]
    pub retrain_full: bool,
}

#[derive(Debug, Args)]
pub struct ModelCmd {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub input: PathBuf,
    /// The dictionary the model was trained with.
    #[arg(long)]
    pub dict: Option<PathBuf>,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

impl ModelCmd {
    fn io(&self) -> ModelIo {
        ModelIo {
            model: self.model.clone(),
            input: self.input.clone(),
            dict: self.dict.clone(),
            output: self.output.clone(),
        }
    }
}

impl TrainCmd {
    /// Defaults, then the config file, then flags, then `--set` pairs.
    pub fn resolve_config(&self) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        if let Some(path) = &self.config {
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            cfg.apply_text(&text, &path.display().to_string())?;
        }
        let flags = [
            ("TASK", &self.task),
            ("MODEL", &self.model),
            ("EMBEDDING", &self.embedding),
            ("EPOCHS", &self.epochs),
            ("BATCH_SIZE", &self.batch_size),
            ("LR", &self.lr),
            ("SEED", &self.seed),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                cfg.set(key, v)?;
            }
        }
        for assignment in &self.set {
            cfg.set_assignment(assignment)?;
        }
        Ok(cfg)
    }
}

/// Runs a parsed command, printing summaries to standard output.
pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Preprocess {
            input,
            dict,
            output,
            histogram,
            max_len,
        } => {
            let n = cmd_preprocess(&PreprocessArgs {
                input,
                dict,
                output,
                histogram,
                max_len,
            })?;
            println!("normalized {n} tweets");
        }
        Command::BuildDict {
            corpus,
            min_count,
            output,
        } => {
            let n = cmd_build_dict(&corpus, min_count, &output)?;
            println!("dictionary has {n} words");
        }
        Command::Train(t) => {
            let cfg = t.resolve_config()?;
            let summary = cmd_train(
                &cfg,
                &TrainArgs {
                    train: t.train.clone(),
                    out_dir: t.out.clone(),
                    dict: t.dict.clone(),
                    retrain_full: t.retrain_full,
                },
            )?;
            let epochs = summary.outcome.history.len();
            match &summary.validation {
                Some(cm) => println!(
                    "{} task {}: validation macro_f1 {:.4} accuracy {:.4} (best epoch {} of {epochs})",
                    cfg.model,
                    cfg.task,
                    cm.macro_f1(),
                    cm.accuracy(),
                    summary.outcome.best_epoch
                ),
                None => println!(
                    "{} task {}: trained {epochs} epochs without validation",
                    cfg.model, cfg.task
                ),
            }
            for p in &summary.written {
                println!("wrote {}", p.display());
            }
        }
        Command::Evaluate(m) => {
            let (_, text) = cmd_evaluate(&m.io())?;
            if m.output.is_none() {
                print!("{text}");
            }
        }
        Command::Predict(m) => {
            let text = cmd_predict(&m.io())?;
            if m.output.is_none() {
                print!("{text}");
            }
        }
    }
    Ok(())
}

fn one_line(message: &str) -> String {
    message.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Parses `args`, runs the command and returns the process exit code:
/// 0 ok, 1 usage, 2 data error, 3 numeric failure.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return 0;
            }
            let rendered = e.to_string();
            let first = rendered
                .lines()
                .find(|l| !l.trim().is_empty())
                .unwrap_or("invalid arguments");
            eprintln!("offtweet: {}", one_line(first.trim_start_matches("error: ")));
            return 1;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("offtweet: {}", one_line(&e.to_string()));
            e.exit_code()
        }
    }
}
