//! Offensive tweet classification toolkit.
//!
//! Raw tweets go through [`textnorm`] (with [`spell`] supplying dictionary
//! segmentation and spelling correction), become embedded sequences via
//! [`embeddings`], and are classified by one of the recurrent architectures
//! in [`models`], built from the layers in [`neural`]. [`training`] handles
//! splitting, class weighting and early stopping; [`metrics`] scores the
//! results. [`cli`] is the command-line shell around all of it.

#![allow(clippy::needless_range_loop, clippy::large_enum_variant)]

pub mod cli;
pub mod data;
pub mod embeddings;
pub mod error;
pub mod metrics;
pub mod models;
pub mod neural;
pub mod spell;
pub mod textnorm;
pub mod training;

pub use error::{Error, Result};
