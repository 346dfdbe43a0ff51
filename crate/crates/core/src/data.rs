//! Tweet records and OLID-layout TSV ingestion.

use std::fmt;
use std::io::BufRead;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LabelA {
    Off,
    Not,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LabelB {
    Tin,
    Unt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LabelC {
    Ind,
    Grp,
    Oth,
}

/// One of the three hierarchical subtasks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Task {
    A,
    B,
    C,
}

impl Task {
    /// Class names in index order. For binary tasks the sigmoid output is the
    /// probability of index 1 (OFF for A, TIN for B).
    pub fn class_names(self) -> &'static [&'static str] {
        match self {
            Task::A => &["NOT", "OFF"],
            Task::B => &["UNT", "TIN"],
            Task::C => &["IND", "GRP", "OTH"],
        }
    }

    pub fn num_classes(self) -> usize {
        self.class_names().len()
    }

    pub fn is_binary(self) -> bool {
        self.num_classes() == 2
    }

    /// Class index of the tweet's label for this task, if labelled.
    pub fn class_of(self, tweet: &LabeledTweet) -> Option<usize> {
        match self {
            Task::A => tweet.label_a.map(|l| match l {
                LabelA::Not => 0,
                LabelA::Off => 1,
            }),
            Task::B => tweet.label_b.map(|l| match l {
                LabelB::Unt => 0,
                LabelB::Tin => 1,
            }),
            Task::C => tweet.label_c.map(|l| match l {
                LabelC::Ind => 0,
                LabelC::Grp => 1,
                LabelC::Oth => 2,
            }),
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Task::A => "A",
            Task::B => "B",
            Task::C => "C",
        };
        f.write_str(s)
    }
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "A" => Ok(Task::A),
            "B" => Ok(Task::B),
            "C" => Ok(Task::C),
            other => Err(Error::Usage(format!("unknown task `{other}` (expected A, B or C)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledTweet {
    pub id: String,
    pub text: String,
    pub label_a: Option<LabelA>,
    pub label_b: Option<LabelB>,
    pub label_c: Option<LabelC>,
}

impl LabeledTweet {
    pub fn unlabeled(id: impl Into<String>, text: impl Into<String>) -> Self {
        LabeledTweet {
            id: id.into(),
            text: text.into(),
            label_a: None,
            label_b: None,
            label_c: None,
        }
    }

    /// Checks the subtask hierarchy: B only for offensive tweets, C only for targeted ones.
    pub fn check_hierarchy(&self) -> std::result::Result<(), String> {
        if self.label_b.is_some() && self.label_a != Some(LabelA::Off) {
            return Err("subtask_b label present on a tweet not labelled OFF".into());
        }
        if self.label_c.is_some() && self.label_b != Some(LabelB::Tin) {
            return Err("subtask_c label present on a tweet not labelled TIN".into());
        }
        Ok(())
    }
}

fn parse_label<T>(field: &str, parse: impl Fn(&str) -> Option<T>) -> std::result::Result<Option<T>, String> {
    let field = field.trim();
    if field.is_empty() || field == "NULL" {
        return Ok(None);
    }
    parse(field).map(Some).ok_or_else(|| format!("unknown label `{field}`"))
}

/// Reads an OLID-layout TSV: a header row, then `id \t tweet` rows optionally
/// followed by the three subtask columns, with `NULL` for absent labels.
pub fn read_tsv<R: BufRead>(reader: R, source_name: &str) -> Result<Vec<LabeledTweet>> {
    let mut rows = Vec::new();
    let mut columns = None;
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::parse(source_name, lineno, e.to_string()))?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        let Some(expected) = columns else {
            let header: Vec<&str> = line.split('\t').collect();
            if header.first().map(|h| h.trim()) != Some("id") || !(header.len() == 2 || header.len() == 5) {
                return Err(Error::parse(
                    source_name,
                    lineno,
                    "expected header `id\\ttweet[\\tsubtask_a\\tsubtask_b\\tsubtask_c]`",
                ));
            }
            columns = Some(header.len());
            continue;
        };
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != expected {
            return Err(Error::parse(
                source_name,
                lineno,
                format!("expected {expected} tab-separated columns, found {}", fields.len()),
            ));
        }
        let mut tweet = LabeledTweet::unlabeled(fields[0], fields[1]);
        if expected == 5 {
            let err = |m: String| Error::parse(source_name, lineno, m);
            tweet.label_a = parse_label(fields[2], |s| match s {
                "OFF" => Some(LabelA::Off),
                "NOT" => Some(LabelA::Not),
                _ => None,
            })
            .map_err(err)?;
            tweet.label_b = parse_label(fields[3], |s| match s {
                "TIN" => Some(LabelB::Tin),
                "UNT" => Some(LabelB::Unt),
                _ => None,
            })
            .map_err(err)?;
            tweet.label_c = parse_label(fields[4], |s| match s {
                "IND" => Some(LabelC::Ind),
                "GRP" => Some(LabelC::Grp),
                "OTH" => Some(LabelC::Oth),
                _ => None,
            })
            .map_err(err)?;
            tweet.check_hierarchy().map_err(err)?;
        }
        rows.push(tweet);
    }
    if columns.is_none() {
        return Err(Error::parse(source_name, 1, "missing header row"));
    }
    Ok(rows)
}
