//! Tweet normalization: an ordered chain of pure stages turning raw tweet
//! text into a fixed-length sequence of lowercase ASCII tokens.

mod contractions;
mod lemma;
mod stages;

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;

pub use contractions::ContractionMap;
pub use lemma::Lemmatizer;
pub use stages::{
    ascii_and_symbol_spacing, expand_contractions, lowercase, pad_or_truncate, reduce_word_lengths, remove_stopwords,
    strip_hashtags, strip_html_entities, strip_mentions, strip_numbers, strip_punctuation, strip_urls, MENTION,
    NEGATIONS, PAD, URL_PLACEHOLDER,
};

use crate::data::LabeledTweet;
use crate::error::{Error, Result};
use crate::spell::{segment, FrequencyDictionary, SegmentConfig};

/// Ordered list of normalized tokens.
pub type TokenSequence = Vec<String>;

pub const DEFAULT_PAD_LENGTH: usize = 50;

pub const DEFAULT_PUNCTUATION: [char; 8] = ['?', ',', ':', '.', '!', ';', '\'', '"'];

/// Pipeline stages, declared in the order the pipeline applies them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Stage {
    StripMentions,
    StripUrls,
    StripHtmlEntities,
    StripHashtags,
    Lowercase,
    AsciiAndSymbolSpacing,
    ExpandContractions,
    StripPunctuation,
    StripNumbers,
    RemoveStopwords,
    ReduceWordLengths,
    SegmentWords,
    CorrectSpellings,
    Lemmatize,
    PadOrTruncate,
}

impl Stage {
    pub const CANONICAL: [Stage; 15] = [
        Stage::StripMentions,
        Stage::StripUrls,
        Stage::StripHtmlEntities,
        Stage::StripHashtags,
        Stage::Lowercase,
        Stage::AsciiAndSymbolSpacing,
        Stage::ExpandContractions,
        Stage::StripPunctuation,
        Stage::StripNumbers,
        Stage::RemoveStopwords,
        Stage::ReduceWordLengths,
        Stage::SegmentWords,
        Stage::CorrectSpellings,
        Stage::Lemmatize,
        Stage::PadOrTruncate,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::StripMentions => "strip_mentions",
            Stage::StripUrls => "strip_urls",
            Stage::StripHtmlEntities => "strip_html_entities",
            Stage::StripHashtags => "strip_hashtags",
            Stage::Lowercase => "lowercase",
            Stage::AsciiAndSymbolSpacing => "ascii_and_symbol_spacing",
            Stage::ExpandContractions => "expand_contractions",
            Stage::StripPunctuation => "strip_punctuation",
            Stage::StripNumbers => "strip_numbers",
            Stage::RemoveStopwords => "remove_stopwords",
            Stage::ReduceWordLengths => "reduce_word_lengths",
            Stage::SegmentWords => "segment_words",
            Stage::CorrectSpellings => "correct_spellings",
            Stage::Lemmatize => "lemmatize",
            Stage::PadOrTruncate => "pad_or_truncate",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Stage::CANONICAL
            .into_iter()
            .find(|st| st.name() == s.trim())
            .ok_or_else(|| Error::Usage(format!("unknown pipeline stage `{s}`")))
    }
}

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub pad_length: usize,
    pub stopwords: HashSet<String>,
    pub keep_negations: bool,
    pub contractions: ContractionMap,
    pub punctuation: HashSet<char>,
    pub lemmatizer: Lemmatizer,
    pub segment: SegmentConfig,
    enabled_stages: Vec<Stage>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            pad_length: DEFAULT_PAD_LENGTH,
            stopwords: english_stopwords(),
            keep_negations: true,
            contractions: ContractionMap::english(),
            punctuation: DEFAULT_PUNCTUATION.into_iter().collect(),
            lemmatizer: Lemmatizer::english(),
            segment: SegmentConfig::default(),
            enabled_stages: Stage::CANONICAL.to_vec(),
        }
    }
}

/// The bundled English stop-word list (the 127-word NLTK set).
pub fn english_stopwords() -> HashSet<String> {
    include_str!("resources/stopwords_en.txt")
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_owned)
        .collect()
}

impl PipelineConfig {
    pub fn enabled_stages(&self) -> &[Stage] {
        &self.enabled_stages
    }

    /// Sets the enabled stages; they must appear in canonical order without repeats.
    pub fn set_enabled_stages(&mut self, stages: Vec<Stage>) -> Result<()> {
        if stages.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Usage(
                "enabled stages must be a subsequence of the canonical stage order".into(),
            ));
        }
        self.enabled_stages = stages;
        Ok(())
    }

    pub fn with_pad_length(mut self, p: usize) -> Self {
        self.pad_length = p;
        self
    }

    pub fn is_enabled(&self, stage: Stage) -> bool {
        self.enabled_stages.contains(&stage)
    }
}

fn is_word(token: &str) -> bool {
    !token.is_empty() && token.bytes().all(|b| b.is_ascii_lowercase())
}

/// A configured normalizer, immutable once built.
#[derive(Debug, Clone)]
pub struct Pipeline {
    cfg: PipelineConfig,
    dict: Option<FrequencyDictionary>,
}

impl Pipeline {
    pub fn new(cfg: PipelineConfig, dict: Option<FrequencyDictionary>) -> Self {
        Pipeline { cfg, dict }
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.cfg
    }

    pub fn dictionary(&self) -> Option<&FrequencyDictionary> {
        self.dict.as_ref()
    }

    /// Runs every enabled stage except padding.
    pub fn normalize(&self, text: &str) -> TokenSequence {
        let cfg = &self.cfg;
        let on = |s| cfg.is_enabled(s);
        let mut text = text.to_owned();
        if on(Stage::StripMentions) {
            text = strip_mentions(&text);
        }
        if on(Stage::StripUrls) {
            text = strip_urls(&text);
        }
        if on(Stage::StripHtmlEntities) {
            text = strip_html_entities(&text);
        }
        if on(Stage::StripHashtags) {
            text = strip_hashtags(&text);
        }
        if on(Stage::Lowercase) {
            text = lowercase(&text);
        }
        if on(Stage::AsciiAndSymbolSpacing) {
            text = ascii_and_symbol_spacing(&text);
        }
        if on(Stage::ExpandContractions) {
            text = expand_contractions(&text, &cfg.contractions);
        }
        if on(Stage::StripPunctuation) {
            text = strip_punctuation(&text, &cfg.punctuation);
        }
        if on(Stage::StripNumbers) {
            text = strip_numbers(&text);
        }
        let mut tokens: TokenSequence = text.split_whitespace().map(str::to_owned).collect();
        if on(Stage::RemoveStopwords) {
            tokens = remove_stopwords(&tokens, &cfg.stopwords, cfg.keep_negations);
        }
        if on(Stage::ReduceWordLengths) {
            tokens = tokens.iter().map(|t| reduce_word_lengths(t)).collect();
        }
        if let Some(dict) = self.dict.as_ref().filter(|d| !d.is_empty()) {
            if on(Stage::SegmentWords) {
                tokens = tokens.into_iter().flat_map(|t| self.segment_token(t, dict)).collect();
            }
            if on(Stage::CorrectSpellings) {
                tokens = tokens.into_iter().map(|t| correct_token(t, dict)).collect();
            }
        }
        if on(Stage::Lemmatize) {
            tokens = tokens.iter().map(|t| cfg.lemmatizer.lemmatize(t)).collect();
        }
        tokens
    }

    /// Splits an unknown word only when every part is an exact dictionary
    /// word; anything else is left for spelling correction.
    fn segment_token(&self, token: String, dict: &FrequencyDictionary) -> Vec<String> {
        if !is_word(&token) || dict.contains(&token) {
            return vec![token];
        }
        let seg = segment(&token, dict, &self.cfg.segment);
        if seg.parts.len() >= 2 && seg.all_known && seg.distance == 0 {
            seg.parts
        } else {
            vec![token]
        }
    }

    /// Full pipeline including padding/truncation when that stage is enabled.
    pub fn run(&self, text: &str) -> TokenSequence {
        let tokens = self.normalize(text);
        if self.cfg.is_enabled(Stage::PadOrTruncate) {
            pad_or_truncate(&tokens, self.cfg.pad_length)
        } else {
            tokens
        }
    }
}

fn correct_token(token: String, dict: &FrequencyDictionary) -> String {
    if !is_word(&token) || dict.contains(&token) {
        return token;
    }
    dict.lookup(&token).map(|s| s.word).unwrap_or(token)
}

pub fn run_pipeline(tweet: &LabeledTweet, cfg: &PipelineConfig, dict: Option<&FrequencyDictionary>) -> TokenSequence {
    Pipeline::new(cfg.clone(), dict.cloned()).run(&tweet.text)
}

/// Counts of pre-padding sequence lengths.
pub fn sentence_length_histogram(corpus: &[TokenSequence]) -> BTreeMap<usize, usize> {
    let mut hist = BTreeMap::new();
    for seq in corpus {
        let len = seq.iter().filter(|t| *t != PAD).count();
        *hist.entry(len).or_insert(0) += 1;
    }
    hist
}

pub fn histogram_csv(hist: &BTreeMap<usize, usize>) -> String {
    let mut out = String::from("length,count\n");
    for (len, count) in hist {
        out.push_str(&format!("{len},{count}\n"));
    }
    out
}
