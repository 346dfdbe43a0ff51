//! The four classifier architectures, built from [`crate::neural`] layers.
//!
//! A [`Network`] maps an embedded `p × D` tweet to class probabilities. A
//! [`Classifier`] adds the vocabulary and the embedding table in front.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::Task;
use crate::embeddings::Vocabulary;
use crate::error::{Error, Result};
use crate::neural::conv::{ConvCache, PoolCache};
use crate::neural::dense::DenseCache;
use crate::neural::recurrent::{BiCache, GruCache, LstmCache};
use crate::neural::{
    conv_output_len, global_avg_pool, global_avg_pool_backward, global_max_pool, global_max_pool_backward,
    weighted_bce, weighted_cce, Activation, Adam, BiMode, Bidirectional, Conv1d, Dense, EmbeddingLayer, Gru, HasParams,
    Lstm, MaxPool1d, Param, Scalar, SequenceCell, SpatialDropout, Tensor2,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    Bilstm,
    CnnBilstm,
    BilstmCnn,
    BigruPlusBilstm,
}

impl Variant {
    pub const ALL: [Variant; 4] = [
        Variant::Bilstm,
        Variant::CnnBilstm,
        Variant::BilstmCnn,
        Variant::BigruPlusBilstm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Bilstm => "BILSTM",
            Variant::CnnBilstm => "CNN_BILSTM",
            Variant::BilstmCnn => "BILSTM_CNN",
            Variant::BigruPlusBilstm => "BIGRU_PLUS_BILSTM",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_uppercase().replace('-', "_");
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == norm)
            .ok_or_else(|| Error::Usage(format!("unknown model variant {s:?}")))
    }
}

/// Output layer: one sigmoid unit or three softmax units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Head {
    Binary,
    Ternary,
}

impl Head {
    pub fn for_task(task: Task) -> Head {
        if task.is_binary() {
            Head::Binary
        } else {
            Head::Ternary
        }
    }

    pub fn outputs(self) -> usize {
        match self {
            Head::Binary => 1,
            Head::Ternary => 3,
        }
    }

    pub fn num_classes(self) -> usize {
        match self {
            Head::Binary => 2,
            Head::Ternary => 3,
        }
    }

    /// Binary heads serve tasks A and B; the ternary head serves task C.
    pub fn check_task(self, task: Task) -> Result<()> {
        if self == Head::for_task(task) {
            Ok(())
        } else {
            Err(Error::Usage(format!("{self} head cannot serve task {task}")))
        }
    }

    /// Predicted class: `p ≥ 0.5` → 1 for a sigmoid, else the first argmax.
    pub fn decide<F: Scalar>(self, probs: &[F]) -> usize {
        match self {
            Head::Binary => usize::from(probs[0] >= F::from_f64_lossy(0.5)),
            Head::Ternary => argmax(probs),
        }
    }

    /// Probability assigned to class `c`.
    pub fn class_prob<F: Scalar>(self, probs: &[F], c: usize) -> F {
        match self {
            Head::Binary if c == 1 => probs[0],
            Head::Binary => F::one() - probs[0],
            Head::Ternary => probs[c],
        }
    }

    /// Weighted loss for true class `y` and its gradient wrt the outputs.
    pub fn loss<F: Scalar>(self, probs: &[F], y: usize, weights: &[F]) -> (F, Vec<F>) {
        match self {
            Head::Binary => {
                let (l, g) = weighted_bce(probs[0], y, weights);
                (l, vec![g])
            }
            Head::Ternary => weighted_cce(probs, y, weights),
        }
    }
}

impl fmt::Display for Head {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Head::Binary => "BINARY",
            Head::Ternary => "TERNARY",
        })
    }
}

impl FromStr for Head {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "BINARY" => Ok(Head::Binary),
            "TERNARY" => Ok(Head::Ternary),
            _ => Err(Error::Usage(format!("unknown head {s:?}"))),
        }
    }
}

/// First index of the maximum.
pub fn argmax<F: Scalar>(v: &[F]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hyper {
    pub seq_len: usize,
    pub embed_dim: usize,
    pub units: usize,
    pub dropout: f64,
    pub bidirectional: bool,
    pub conv_width: usize,
    pub filters: usize,
    pub pool: usize,
    pub pool_stride: usize,
}

impl Default for Hyper {
    fn default() -> Self {
        Hyper {
            seq_len: 50,
            embed_dim: 100,
            units: 50,
            dropout: 0.5,
            bidirectional: true,
            conv_width: 4,
            filters: 64,
            pool: 4,
            pool_stride: 4,
        }
    }
}

/// Intermediate shapes of one architecture.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ShapeTable {
    /// Width of a recurrent layer's output (`directions × units`).
    pub rnn_width: usize,
    /// Rows after the convolution, where there is one.
    pub conv_len: Option<usize>,
    /// Rows after strided max pooling, where there is one.
    pub pooled_len: Option<usize>,
    /// Width of the vector fed to the dense head.
    pub feature_width: usize,
}

impl Hyper {
    pub fn directions(&self) -> usize {
        if self.bidirectional {
            2
        } else {
            1
        }
    }

    pub fn shapes(&self, variant: Variant) -> Result<ShapeTable> {
        if self.seq_len == 0 || self.embed_dim == 0 || self.units == 0 {
            return Err(Error::Shape(
                "sequence length, embedding size and units must be positive".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Shape(format!("dropout {} outside [0, 1)", self.dropout)));
        }
        let rnn_width = self.directions() * self.units;
        let conv = |len: usize| {
            conv_output_len(len, self.conv_width).ok_or_else(|| {
                Error::Shape(format!(
                    "{len} steps cannot hold a width-{} convolution",
                    self.conv_width
                ))
            })
        };
        if variant != Variant::Bilstm && self.filters == 0 {
            return Err(Error::Shape("convolution needs at least one filter".into()));
        }
        Ok(match variant {
            Variant::Bilstm => ShapeTable {
                rnn_width,
                conv_len: None,
                pooled_len: None,
                feature_width: rnn_width,
            },
            Variant::CnnBilstm => {
                let conv_len = conv(self.seq_len)?;
                let pooled = MaxPool1d::new(self.pool, self.pool_stride)
                    .output_len(conv_len)
                    .ok_or_else(|| Error::Shape(format!("{conv_len} steps cannot be pooled by {}", self.pool)))?;
                ShapeTable {
                    rnn_width,
                    conv_len: Some(conv_len),
                    pooled_len: Some(pooled),
                    feature_width: rnn_width,
                }
            }
            Variant::BilstmCnn => ShapeTable {
                rnn_width,
                conv_len: Some(conv(self.seq_len)?),
                pooled_len: None,
                feature_width: self.filters,
            },
            Variant::BigruPlusBilstm => ShapeTable {
                rnn_width,
                conv_len: Some(conv(self.seq_len)?),
                pooled_len: None,
                feature_width: 4 * self.filters,
            },
        })
    }
}

#[derive(Debug, Clone)]
enum Body<F> {
    Bilstm {
        rnn: Bidirectional<Lstm<F>>,
    },
    CnnBilstm {
        conv: Conv1d<F>,
        pool: MaxPool1d,
        rnn: Bidirectional<Lstm<F>>,
    },
    BilstmCnn {
        rnn: Bidirectional<Lstm<F>>,
        conv: Conv1d<F>,
    },
    BigruPlusBilstm {
        lstm: Bidirectional<Lstm<F>>,
        lstm_conv: Conv1d<F>,
        gru: Bidirectional<Gru<F>>,
        gru_conv: Conv1d<F>,
    },
}

#[derive(Debug, Clone)]
enum BodyCache<F> {
    Bilstm {
        rnn: BiCache<F, LstmCache<F>>,
    },
    CnnBilstm {
        conv: ConvCache<F>,
        pool: PoolCache,
        rnn: BiCache<F, LstmCache<F>>,
    },
    BilstmCnn {
        rnn: BiCache<F, LstmCache<F>>,
        conv: ConvCache<F>,
        gmp: PoolCache,
    },
    BigruPlusBilstm {
        lstm: BiCache<F, LstmCache<F>>,
        lstm_conv: ConvCache<F>,
        lstm_gmp: PoolCache,
        gru: BiCache<F, GruCache<F>>,
        gru_conv: ConvCache<F>,
        gru_gmp: PoolCache,
        conv_len: usize,
    },
}

/// Forward state needed by [`Network::backward`].
#[derive(Debug, Clone)]
pub struct NetworkCache<F> {
    mask: Option<Vec<F>>,
    body: BodyCache<F>,
    dense: DenseCache<F>,
}

fn bilstm<F: Scalar, R: Rng>(name: &str, d: usize, h: &Hyper, mode: BiMode, rng: &mut R) -> Bidirectional<Lstm<F>> {
    let fwd = Lstm::new(&format!("{name}.fwd"), d, h.units, rng);
    let bwd = h
        .bidirectional
        .then(|| Lstm::new(&format!("{name}.bwd"), d, h.units, rng));
    Bidirectional::new(fwd, bwd, mode)
}

fn bigru<F: Scalar, R: Rng>(name: &str, d: usize, h: &Hyper, rng: &mut R) -> Bidirectional<Gru<F>> {
    let fwd = Gru::new(&format!("{name}.fwd"), d, h.units, rng);
    let bwd = h
        .bidirectional
        .then(|| Gru::new(&format!("{name}.bwd"), d, h.units, rng));
    Bidirectional::new(fwd, bwd, BiMode::Sequence)
}

fn check<F: Scalar>(t: &Tensor2<F>, layer: &str) -> Result<()> {
    t.ensure_finite(layer)
}

fn check_vec<F: Scalar>(v: &[F], layer: &str) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite {
            layer: layer.to_owned(),
        })
    }
}

/// Embedded tweet → class probabilities.
#[derive(Debug, Clone)]
pub struct Network<F> {
    pub variant: Variant,
    pub head: Head,
    pub hyper: Hyper,
    pub shapes: ShapeTable,
    pub dropout: SpatialDropout,
    body: Body<F>,
    pub dense: Dense<F>,
}

impl<F: Scalar> Network<F> {
    /// Builds with seeded initial weights, checking every intermediate shape.
    pub fn build(variant: Variant, head: Head, hyper: Hyper, seed: u64) -> Result<Self> {
        let shapes = hyper.shapes(variant)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rng = &mut rng;
        let d = hyper.embed_dim;
        let h = &hyper;
        let body = match variant {
            Variant::Bilstm => Body::Bilstm {
                rnn: bilstm("bilstm", d, h, BiMode::Last, rng),
            },
            Variant::CnnBilstm => Body::CnnBilstm {
                conv: Conv1d::new("conv", h.conv_width, d, h.filters, rng),
                pool: MaxPool1d::new(h.pool, h.pool_stride),
                rnn: bilstm("bilstm", h.filters, h, BiMode::Last, rng),
            },
            Variant::BilstmCnn => Body::BilstmCnn {
                rnn: bilstm("bilstm", d, h, BiMode::Sequence, rng),
                conv: Conv1d::new("conv", h.conv_width, shapes.rnn_width, h.filters, rng),
            },
            Variant::BigruPlusBilstm => Body::BigruPlusBilstm {
                lstm: bilstm("bilstm", d, h, BiMode::Sequence, rng),
                lstm_conv: Conv1d::new("bilstm_conv", h.conv_width, shapes.rnn_width, h.filters, rng),
                gru: bigru("bigru", d, h, rng),
                gru_conv: Conv1d::new("bigru_conv", h.conv_width, shapes.rnn_width, h.filters, rng),
            },
        };
        let activation = match head {
            Head::Binary => Activation::Sigmoid,
            Head::Ternary => Activation::Softmax,
        };
        let dense = Dense::new("dense", shapes.feature_width, head.outputs(), activation, rng);
        let net = Network {
            variant,
            head,
            hyper,
            shapes,
            dropout: SpatialDropout::new(hyper.dropout),
            body,
            dense,
        };
        net.verify_shapes()?;
        Ok(net)
    }

    /// Checks that the constructed layers agree with the shape table.
    fn verify_shapes(&self) -> Result<()> {
        let s = &self.shapes;
        let ok = match &self.body {
            Body::Bilstm { rnn } => rnn.output_width() == s.rnn_width,
            Body::CnnBilstm { conv, rnn, .. } => {
                conv.in_channels() == self.hyper.embed_dim
                    && rnn.forward.input_dim() == conv.out_channels()
                    && rnn.output_width() == s.feature_width
            }
            Body::BilstmCnn { rnn, conv } => {
                conv.in_channels() == rnn.output_width() && conv.out_channels() == s.feature_width
            }
            Body::BigruPlusBilstm {
                lstm,
                lstm_conv,
                gru,
                gru_conv,
            } => {
                lstm_conv.in_channels() == lstm.output_width()
                    && gru_conv.in_channels() == gru.output_width()
                    && 2 * (lstm_conv.out_channels() + gru_conv.out_channels()) == s.feature_width
            }
        };
        if ok && self.dense.inputs() == s.feature_width && self.dense.outputs() == self.head.outputs() {
            Ok(())
        } else {
            Err(Error::Shape(format!("{} layers do not chain", self.variant)))
        }
    }

    /// Spatial-dropout row multipliers for one training sample.
    pub fn sample_mask<R: Rng>(&self, rng: &mut R) -> Option<Vec<F>> {
        (self.dropout.rate > 0.0).then(|| self.dropout.sample_mask(self.hyper.seq_len, rng))
    }

    /// Forward pass on one embedded tweet. `mask` holds spatial-dropout row
    /// multipliers (training); `None` is inference.
    pub fn forward(&self, x: &Tensor2<F>, mask: Option<&[F]>) -> Result<(Vec<F>, NetworkCache<F>)> {
        if x.shape() != (self.hyper.seq_len, self.hyper.embed_dim) {
            return Err(Error::Shape(format!(
                "expected a {}x{} input, got {}x{}",
                self.hyper.seq_len,
                self.hyper.embed_dim,
                x.rows(),
                x.cols()
            )));
        }
        let dropped;
        let x = match mask {
            Some(m) => {
                dropped = crate::neural::dropout::apply_row_mask(x, m);
                &dropped
            }
            None => x,
        };
        check(x, "spatial_dropout")?;
        let (features, body) = match &self.body {
            Body::Bilstm { rnn } => {
                let (h, c) = rnn.forward(x);
                check(&h, "bilstm")?;
                (h.into_data(), BodyCache::Bilstm { rnn: c })
            }
            Body::CnnBilstm { conv, pool, rnn } => {
                let (y, cc) = conv.forward(x);
                check(&y, "conv1d")?;
                let (y, pc) = pool.forward(&y);
                let (h, rc) = rnn.forward(&y);
                check(&h, "bilstm")?;
                (
                    h.into_data(),
                    BodyCache::CnnBilstm {
                        conv: cc,
                        pool: pc,
                        rnn: rc,
                    },
                )
            }
            Body::BilstmCnn { rnn, conv } => {
                let (h, rc) = rnn.forward(x);
                check(&h, "bilstm")?;
                let (y, cc) = conv.forward(&h);
                check(&y, "conv1d")?;
                let (v, gc) = global_max_pool(&y);
                (
                    v,
                    BodyCache::BilstmCnn {
                        rnn: rc,
                        conv: cc,
                        gmp: gc,
                    },
                )
            }
            Body::BigruPlusBilstm {
                lstm,
                lstm_conv,
                gru,
                gru_conv,
            } => {
                let (hl, lc) = lstm.forward(x);
                check(&hl, "bilstm")?;
                let (yl, lcc) = lstm_conv.forward(&hl);
                check(&yl, "bilstm_conv")?;
                let (hg, gc) = gru.forward(x);
                check(&hg, "bigru")?;
                let (yg, gcc) = gru_conv.forward(&hg);
                check(&yg, "bigru_conv")?;
                let (ml, lgc) = global_max_pool(&yl);
                let (mg, ggc) = global_max_pool(&yg);
                let mut v = ml;
                v.extend(global_avg_pool(&yl));
                v.extend(mg);
                v.extend(global_avg_pool(&yg));
                (
                    v,
                    BodyCache::BigruPlusBilstm {
                        lstm: lc,
                        lstm_conv: lcc,
                        lstm_gmp: lgc,
                        gru: gc,
                        gru_conv: gcc,
                        gru_gmp: ggc,
                        conv_len: yl.rows(),
                    },
                )
            }
        };
        let (probs, dense) = self.dense.forward(&features);
        check_vec(&probs, "dense")?;
        let cache = NetworkCache {
            mask: mask.map(<[F]>::to_vec),
            body,
            dense,
        };
        Ok((probs, cache))
    }

    /// Accumulates parameter gradients for `d_probs` (the loss gradient wrt
    /// the output probabilities) and returns the gradient wrt the input.
    pub fn backward(&mut self, cache: &NetworkCache<F>, d_probs: &[F]) -> Tensor2<F> {
        let df = self.dense.backward(&cache.dense, d_probs);
        let dx = match (&mut self.body, &cache.body) {
            (Body::Bilstm { rnn }, BodyCache::Bilstm { rnn: c }) => rnn.backward(c, &Tensor2::row_vector(df)),
            (
                Body::CnnBilstm { conv, pool, rnn },
                BodyCache::CnnBilstm {
                    conv: cc,
                    pool: pc,
                    rnn: rc,
                },
            ) => {
                let dp = rnn.backward(rc, &Tensor2::row_vector(df));
                let dy = pool.backward(pc, &dp);
                conv.backward(cc, &dy)
            }
            (Body::BilstmCnn { rnn, conv }, BodyCache::BilstmCnn { rnn: rc, conv: cc, gmp }) => {
                let dy = global_max_pool_backward(gmp, &df);
                let dh = conv.backward(cc, &dy);
                rnn.backward(rc, &dh)
            }
            (
                Body::BigruPlusBilstm {
                    lstm,
                    lstm_conv,
                    gru,
                    gru_conv,
                },
                BodyCache::BigruPlusBilstm {
                    lstm: lc,
                    lstm_conv: lcc,
                    lstm_gmp,
                    gru: gc,
                    gru_conv: gcc,
                    gru_gmp,
                    conv_len,
                },
            ) => {
                let f = lstm_conv.out_channels();
                let mut dyl = global_max_pool_backward(lstm_gmp, &df[..f]);
                dyl.add_assign(&global_avg_pool_backward(*conv_len, &df[f..2 * f]));
                let mut dyg = global_max_pool_backward(gru_gmp, &df[2 * f..3 * f]);
                dyg.add_assign(&global_avg_pool_backward(*conv_len, &df[3 * f..]));
                let dhl = lstm_conv.backward(lcc, &dyl);
                let mut dx = lstm.backward(lc, &dhl);
                let dhg = gru_conv.backward(gcc, &dyg);
                dx.add_assign(&gru.backward(gc, &dhg));
                dx
            }
            _ => unreachable!("cache built by a different variant"),
        };
        match &cache.mask {
            Some(m) => crate::neural::dropout::apply_row_mask(&dx, m),
            None => dx,
        }
    }
}

impl<F: Scalar> HasParams<F> for Network<F> {
    fn params(&self) -> Vec<&Param<F>> {
        let mut v = match &self.body {
            Body::Bilstm { rnn } => rnn.params(),
            Body::CnnBilstm { conv, rnn, .. } => {
                let mut v = conv.params();
                v.extend(rnn.params());
                v
            }
            Body::BilstmCnn { rnn, conv } => {
                let mut v = rnn.params();
                v.extend(conv.params());
                v
            }
            Body::BigruPlusBilstm {
                lstm,
                lstm_conv,
                gru,
                gru_conv,
            } => {
                let mut v = lstm.params();
                v.extend(lstm_conv.params());
                v.extend(gru.params());
                v.extend(gru_conv.params());
                v
            }
        };
        v.extend(self.dense.params());
        v
    }

    fn params_mut(&mut self) -> Vec<&mut Param<F>> {
        let mut v = match &mut self.body {
            Body::Bilstm { rnn } => rnn.params_mut(),
            Body::CnnBilstm { conv, rnn, .. } => {
                let mut v = conv.params_mut();
                v.extend(rnn.params_mut());
                v
            }
            Body::BilstmCnn { rnn, conv } => {
                let mut v = rnn.params_mut();
                v.extend(conv.params_mut());
                v
            }
            Body::BigruPlusBilstm {
                lstm,
                lstm_conv,
                gru,
                gru_conv,
            } => {
                let mut v = lstm.params_mut();
                v.extend(lstm_conv.params_mut());
                v.extend(gru.params_mut());
                v.extend(gru_conv.params_mut());
                v
            }
        };
        v.extend(self.dense.params_mut());
        v
    }
}

/// Forward state of a [`Classifier`] for one tweet.
#[derive(Debug, Clone)]
pub struct ClassifierCache<F> {
    ids: Vec<usize>,
    net: NetworkCache<F>,
}

/// Vocabulary, embedding table and network for one task.
#[derive(Debug, Clone)]
pub struct Classifier<F = f32> {
    pub task: Task,
    pub vocab: Vocabulary,
    pub embedding: EmbeddingLayer<F>,
    pub network: Network<F>,
}

impl<F: Scalar> Classifier<F> {
    /// Rejects a head that does not match the task and an embedding table
    /// whose shape disagrees with the vocabulary or the network.
    pub fn new(task: Task, vocab: Vocabulary, embedding: EmbeddingLayer<F>, network: Network<F>) -> Result<Self> {
        network.head.check_task(task)?;
        if embedding.vocab_size() != vocab.len() {
            return Err(Error::Dimension {
                expected: vocab.len(),
                found: embedding.vocab_size(),
            });
        }
        if embedding.dim() != network.hyper.embed_dim {
            return Err(Error::Dimension {
                expected: network.hyper.embed_dim,
                found: embedding.dim(),
            });
        }
        Ok(Classifier {
            task,
            vocab,
            embedding,
            network,
        })
    }

    pub fn head(&self) -> Head {
        self.network.head
    }

    pub fn encode<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<usize> {
        self.vocab.encode(tokens)
    }

    pub fn forward(&self, ids: &[usize], mask: Option<&[F]>) -> Result<(Vec<F>, ClassifierCache<F>)> {
        if let Some(&bad) = ids.iter().find(|&&id| id >= self.vocab.len()) {
            return Err(Error::Data(format!("token id {bad} outside the vocabulary")));
        }
        let x = self.embedding.forward(ids);
        check(&x, "embedding")?;
        let (probs, net) = self.network.forward(&x, mask)?;
        Ok((probs, ClassifierCache { ids: ids.to_vec(), net }))
    }

    /// Inference-mode probabilities.
    pub fn predict_proba(&self, ids: &[usize]) -> Result<Vec<F>> {
        Ok(self.forward(ids, None)?.0)
    }

    pub fn predict(&self, ids: &[usize]) -> Result<usize> {
        Ok(self.head().decide(&self.predict_proba(ids)?))
    }

    pub fn backward(&mut self, cache: &ClassifierCache<F>, d_probs: &[F]) {
        let dx = self.network.backward(&cache.net, d_probs);
        self.embedding.backward(&cache.ids, &dx);
    }

    /// One optimizer step on a minibatch: the loss is the mean of the
    /// class-weighted per-sample losses. Returns the loss and the training
    /// mode predictions.
    pub fn train_step<R: Rng>(
        &mut self,
        batch: &[&[usize]],
        labels: &[usize],
        weights: &[F],
        adam: &mut Adam<F>,
        rng: &mut R,
    ) -> Result<(F, Vec<usize>)> {
        assert_eq!(batch.len(), labels.len());
        self.zero_grad();
        let scale = F::one() / F::from_f64_lossy(batch.len().max(1) as f64);
        let mut total = F::zero();
        let mut preds = Vec::with_capacity(batch.len());
        for (ids, &y) in batch.iter().zip(labels) {
            let mask = self.network.sample_mask(rng);
            let (probs, cache) = self.forward(ids, mask.as_deref())?;
            let (loss, mut grad) = self.head().loss(&probs, y, weights);
            if !loss.is_finite() {
                return Err(Error::NonFinite { layer: "loss".into() });
            }
            total += loss;
            preds.push(self.head().decide(&probs));
            grad.iter_mut().for_each(|g| *g *= scale);
            self.backward(&cache, &grad);
        }
        for p in self.params() {
            if !p.grad.is_finite() {
                return Err(Error::NonFinite {
                    layer: format!("gradient of {}", p.name),
                });
            }
        }
        adam.step(&mut self.params_mut());
        Ok((total * scale, preds))
    }
}

impl<F: Scalar> HasParams<F> for Classifier<F> {
    fn params(&self) -> Vec<&Param<F>> {
        let mut v = self.embedding.params();
        v.extend(self.network.params());
        v
    }

    fn params_mut(&mut self) -> Vec<&mut Param<F>> {
        let mut v = self.embedding.params_mut();
        v.extend(self.network.params_mut());
        v
    }
}
