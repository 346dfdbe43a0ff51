//! Frequency dictionary, symmetric-delete spelling correction and
//! dictionary-driven word segmentation.

mod dictionary;
mod distance;
mod segment;

pub use dictionary::{
    DictionaryConfig, FrequencyDictionary, Suggestion, DEFAULT_MAX_EDIT_DISTANCE, DEFAULT_PREFIX_LENGTH,
};
pub use distance::DistanceMetric;
pub use segment::{max_part_len, score_part, segment, unknown_log_prob, PartScore, SegmentConfig, Segmentation};
