//! A small reverse-mode neural core. Layers own their parameters and
//! gradient buffers; `forward` returns a cache that `backward` consumes.

pub mod adam;
pub mod conv;
pub mod dense;
pub mod dropout;
pub mod embedding;
pub mod init;
pub mod loss;
pub mod param;
pub mod recurrent;
pub mod tensor;

pub use adam::{Adam, AdamConfig};
pub use conv::{
    conv_output_len, global_avg_pool, global_avg_pool_backward, global_max_pool, global_max_pool_backward, Conv1d,
    MaxPool1d,
};
pub use dense::{Activation, Dense};
pub use dropout::SpatialDropout;
pub use embedding::EmbeddingLayer;
pub use loss::{weighted_bce, weighted_cce};
pub use param::{HasParams, Param};
pub use recurrent::{BiMode, Bidirectional, Gru, Lstm, SequenceCell};
pub use tensor::{Scalar, Tensor2};
