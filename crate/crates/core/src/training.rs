//! Splitting, class weighting and the epoch loop with early stopping on a
//! moving average of validation macro F1.

use std::fmt::Write as _;
use std::ops::ControlFlow;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::{LabelA, LabelB, LabeledTweet, Task};
use crate::error::{Error, Result};
use crate::metrics::{confusion, ConfusionMatrix};
use crate::models::Classifier;
use crate::neural::{Adam, AdamConfig, HasParams, Scalar, Tensor2};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub stratified: bool,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            train_fraction: 0.8,
            stratified: true,
            seed: 0,
        }
    }
}

/// Splits `n` per-group counts so they sum to `round(total · fraction)`,
/// flooring each and handing the remainder to the largest fractional parts
/// (earlier groups first on ties).
fn apportion(counts: &[usize], fraction: f64) -> Vec<usize> {
    let total: usize = counts.iter().sum();
    let target = (total as f64 * fraction).round() as usize;
    let exact: Vec<f64> = counts.iter().map(|&c| c as f64 * fraction).collect();
    let mut out: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let mut order: Vec<usize> = (0..counts.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = exact[a] - exact[a].floor();
        let fb = exact[b] - exact[b].floor();
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    let mut missing = target.saturating_sub(out.iter().sum());
    for &c in order.iter().cycle().take(counts.len() * 2) {
        if missing == 0 {
            break;
        }
        if out[c] < counts[c] {
            out[c] += 1;
            missing -= 1;
        }
    }
    out
}

/// Train and validation indices into `labels`. With stratification each
/// class is shuffled and split separately; both index lists come back in
/// ascending order.
pub fn stratified_split(labels: &[usize], spec: &SplitSpec) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(0.0..=1.0).contains(&spec.train_fraction) {
        return Err(Error::Usage(format!(
            "train fraction {} outside [0, 1]",
            spec.train_fraction
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let groups: Vec<Vec<usize>> = if spec.stratified {
        let k = labels.iter().copied().max().map_or(0, |m| m + 1);
        let mut g = vec![Vec::new(); k];
        for (i, &l) in labels.iter().enumerate() {
            g[l].push(i);
        }
        g
    } else {
        vec![(0..labels.len()).collect()]
    };
    let counts: Vec<usize> = groups.iter().map(Vec::len).collect();
    let take = apportion(&counts, spec.train_fraction);
    let mut train = Vec::new();
    let mut val = Vec::new();
    for (mut g, n) in groups.into_iter().zip(take) {
        g.shuffle(&mut rng);
        train.extend_from_slice(&g[..n]);
        val.extend_from_slice(&g[n..]);
    }
    train.sort_unstable();
    val.sort_unstable();
    Ok((train, val))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WeightMode {
    /// `w_c = N / (K · n_c)`: balanced data gets unit weights.
    #[default]
    Normalized,
    /// `w_c = N / n_c`, the plain inverse class proportion.
    Raw,
    /// All ones.
    None,
}

impl std::str::FromStr for WeightMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "normalized" | "balanced" => Ok(WeightMode::Normalized),
            "raw" | "inverse" => Ok(WeightMode::Raw),
            "none" | "off" => Ok(WeightMode::None),
            _ => Err(Error::Usage(format!("unknown class weighting {s:?}"))),
        }
    }
}

impl std::fmt::Display for WeightMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            WeightMode::Normalized => "normalized",
            WeightMode::Raw => "raw",
            WeightMode::None => "none",
        })
    }
}

/// Per-class loss weights. `K` counts only the classes that occur; a class
/// with no samples gets weight 1 (it never contributes to the loss).
pub fn compute_class_weights(labels: &[usize], k: usize, mode: WeightMode) -> Vec<f64> {
    let mut counts = vec![0usize; k];
    for &l in labels {
        counts[l] += 1;
    }
    let n = labels.len() as f64;
    let present = counts.iter().filter(|&&c| c > 0).count() as f64;
    counts
        .iter()
        .map(|&c| match mode {
            _ if c == 0 => 1.0,
            WeightMode::Normalized => n / (present * c as f64),
            WeightMode::Raw => n / c as f64,
            WeightMode::None => 1.0,
        })
        .collect()
}

/// What an epoch's validation score means for early stopping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StopDecision {
    pub moving_average: f64,
    pub improved: bool,
    pub stop: bool,
}

/// Tracks the moving average of validation macro F1 over the last `window`
/// epochs and stops after `patience` epochs without a strict improvement.
#[derive(Debug, Clone, PartialEq)]
pub struct EarlyStopState {
    pub window: usize,
    pub patience: usize,
    scores: Vec<f64>,
    best: Option<(usize, f64)>,
}

impl EarlyStopState {
    pub fn new(window: usize, patience: usize) -> Self {
        EarlyStopState {
            window: window.max(1),
            patience,
            scores: Vec::new(),
            best: None,
        }
    }

    /// Records the score of the next epoch (epochs are 1-based).
    pub fn update(&mut self, val_f1: f64) -> StopDecision {
        self.scores.push(val_f1);
        let epoch = self.scores.len();
        let tail = &self.scores[epoch.saturating_sub(self.window)..];
        let avg = tail.iter().sum::<f64>() / tail.len() as f64;
        let improved = self.best.is_none_or(|(_, b)| avg > b);
        if improved {
            self.best = Some((epoch, avg));
        }
        let since = epoch - self.best.map_or(epoch, |(e, _)| e);
        StopDecision {
            moving_average: avg,
            improved,
            stop: !improved && since >= self.patience,
        }
    }

    pub fn best_epoch(&self) -> Option<usize> {
        self.best.map(|(e, _)| e)
    }

    pub fn best_average(&self) -> Option<f64> {
        self.best.map(|(_, a)| a)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub adam: AdamConfig,
    pub weighting: WeightMode,
    pub window: usize,
    pub patience: usize,
    /// Seeds minibatch shuffling and dropout masks.
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 50,
            batch_size: 32,
            adam: AdamConfig::default(),
            weighting: WeightMode::Normalized,
            window: 5,
            patience: 10,
            seed: 0,
        }
    }
}

/// One encoded tweet and its class index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Example {
    pub ids: Vec<usize>,
    pub label: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_f1: f64,
    pub val_f1: Option<f64>,
    pub val_acc: Option<f64>,
}

pub const HISTORY_HEADER: &str = "epoch,train_loss,train_f1,val_f1,val_acc";

pub fn history_csv(history: &[EpochRecord]) -> String {
    let mut out = format!("{HISTORY_HEADER}\n");
    let opt = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:.6}"));
    for r in history {
        writeln!(
            out,
            "{},{:.6},{:.6},{},{}",
            r.epoch,
            r.train_loss,
            r.train_f1,
            opt(r.val_f1),
            opt(r.val_acc)
        )
        .unwrap();
    }
    out
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub history: Vec<EpochRecord>,
    /// Epoch whose parameters were restored (the last epoch without validation).
    pub best_epoch: usize,
    pub stopped_early: bool,
    pub class_weights: Vec<f64>,
}

/// Predictions of `model` in inference mode.
pub fn predict_all<F: Scalar>(model: &Classifier<F>, examples: &[Example]) -> Result<Vec<usize>> {
    examples.iter().map(|e| model.predict(&e.ids)).collect()
}

pub fn evaluate<F: Scalar>(model: &Classifier<F>, examples: &[Example]) -> Result<ConfusionMatrix> {
    let preds = predict_all(model, examples)?;
    let truth: Vec<usize> = examples.iter().map(|e| e.label).collect();
    confusion(&truth, &preds, model.head().num_classes())
}

fn snapshot<F: Scalar>(model: &Classifier<F>) -> Vec<Tensor2<F>> {
    model.params().iter().map(|p| p.value.clone()).collect()
}

fn restore<F: Scalar>(model: &mut Classifier<F>, snap: Vec<Tensor2<F>>) {
    for (p, v) in model.params_mut().into_iter().zip(snap) {
        p.value = v;
    }
}

/// Trains on shuffled minibatches. With a validation set, each epoch is
/// scored and training stops early; the parameters of the epoch with the
/// best moving-average validation F1 are restored. Without one, all
/// `epochs` run and the final parameters are kept.
pub fn train<F: Scalar>(
    model: &mut Classifier<F>,
    train_set: &[Example],
    val_set: &[Example],
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    train_with(model, train_set, val_set, cfg, |_, _| ControlFlow::Continue(()))
}

/// [`train`] with a callback after every epoch; `Break` ends training
/// after that epoch (restoration still applies).
pub fn train_with<F: Scalar>(
    model: &mut Classifier<F>,
    train_set: &[Example],
    val_set: &[Example],
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochRecord, &Classifier<F>) -> ControlFlow<()>,
) -> Result<TrainOutcome> {
    if train_set.is_empty() {
        return Err(Error::Data("no training examples".into()));
    }
    if cfg.batch_size == 0 {
        return Err(Error::Usage("batch size must be positive".into()));
    }
    let k = model.head().num_classes();
    let labels: Vec<usize> = train_set.iter().map(|e| e.label).collect();
    let class_weights = compute_class_weights(&labels, k, cfg.weighting);
    let weights: Vec<F> = class_weights.iter().map(|&w| F::from_f64_lossy(w)).collect();
    let mut adam = Adam::new(cfg.adam);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut stop = EarlyStopState::new(cfg.window, cfg.patience);
    let mut best: Option<Vec<Tensor2<F>>> = None;
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut stopped_early = false;
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut preds = vec![0; train_set.len()];
        for chunk in order.chunks(cfg.batch_size) {
            let batch: Vec<&[usize]> = chunk.iter().map(|&i| train_set[i].ids.as_slice()).collect();
            let ys: Vec<usize> = chunk.iter().map(|&i| train_set[i].label).collect();
            let (loss, batch_preds) = model.train_step(&batch, &ys, &weights, &mut adam, &mut rng)?;
            loss_sum += loss.to_f64_lossy() * chunk.len() as f64;
            for (&i, p) in chunk.iter().zip(batch_preds) {
                preds[i] = p;
            }
        }
        let train_f1 = confusion(&labels, &preds, k)?.macro_f1();
        let mut record = EpochRecord {
            epoch,
            train_loss: loss_sum / train_set.len() as f64,
            train_f1,
            val_f1: None,
            val_acc: None,
        };
        if !val_set.is_empty() {
            let cm = evaluate(model, val_set)?;
            record.val_f1 = Some(cm.macro_f1());
            record.val_acc = Some(cm.accuracy());
            let decision = stop.update(cm.macro_f1());
            if decision.improved {
                best = Some(snapshot(model));
            }
            history.push(record);
            let halt = on_epoch(&record, model).is_break();
            if decision.stop || halt {
                stopped_early = decision.stop && epoch < cfg.epochs;
                break;
            }
        } else {
            history.push(record);
            if on_epoch(&record, model).is_break() {
                break;
            }
        }
    }
    let best_epoch = match (stop.best_epoch(), best) {
        (Some(e), Some(snap)) => {
            restore(model, snap);
            e
        }
        _ => history.len(),
    };
    Ok(TrainOutcome {
        history,
        best_epoch,
        stopped_early,
        class_weights,
    })
}

/// Rows that carry a label for `task` under the annotation hierarchy: all
/// rows for A, offensive rows for B, targeted rows for C.
pub fn hierarchical_filter(data: &[LabeledTweet], task: Task) -> Vec<LabeledTweet> {
    data.iter()
        .filter(|t| match task {
            Task::A => true,
            Task::B => t.label_a == Some(LabelA::Off),
            Task::C => t.label_b == Some(LabelB::Tin),
        })
        .cloned()
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn split_rounding() {
        let labels: Vec<usize> = (0..100).map(|i| usize::from(i >= 88)).collect();
        let spec = SplitSpec {
            seed: 3,
            ..SplitSpec::default()
        };
        let (train, val) = stratified_split(&labels, &spec).unwrap();
        assert_eq!((train.len(), val.len()), (80, 20));
        let minority = |idx: &[usize]| idx.iter().filter(|&&i| labels[i] == 1).count();
        assert_eq!((minority(&train), minority(&val)), (10, 2));
        assert_eq!(stratified_split(&labels, &spec).unwrap(), (train, val));
    }

    #[test]
    fn single_class_split() {
        let labels = vec![0; 10];
        let (train, val) = stratified_split(&labels, &SplitSpec::default()).unwrap();
        assert_eq!((train.len(), val.len()), (8, 2));
    }

    #[test]
    fn class_weights_examples() {
        let mut labels = vec![1; 88];
        labels.extend(vec![0; 12]);
        let w = compute_class_weights(&labels, 2, WeightMode::Normalized);
        assert!((w[1] - 1.0 / (2.0 * 0.88)).abs() < 1e-12);
        assert!((w[0] - 1.0 / (2.0 * 0.12)).abs() < 1e-12);
        assert!((w[1] - 0.568).abs() < 1e-3 && (w[0] - 4.167).abs() < 1e-3);
        assert_eq!(
            compute_class_weights(&[0, 1, 0, 1], 2, WeightMode::Normalized),
            vec![1.0, 1.0]
        );
        let mut three = vec![0; 50];
        three.extend(vec![1; 30]);
        three.extend(vec![2; 20]);
        let w = compute_class_weights(&three, 3, WeightMode::Normalized);
        for (a, b) in w.iter().zip([2.0 / 3.0, 10.0 / 9.0, 5.0 / 3.0]) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(compute_class_weights(&three, 3, WeightMode::None), vec![1.0; 3]);
        assert_eq!(
            compute_class_weights(&[0, 0, 0, 1], 2, WeightMode::Raw),
            vec![4.0 / 3.0, 4.0]
        );
    }

    #[test]
    fn early_stopping_window_and_patience() {
        let mut s = EarlyStopState::new(2, 2);
        assert!(s.update(0.5).improved);
        assert!(s.update(0.7).improved); // avg 0.6
        let d = s.update(0.4); // avg 0.55
        assert!(!d.improved && !d.stop);
        let d = s.update(0.5); // avg 0.45
        assert!(d.stop);
        assert_eq!(s.best_epoch(), Some(2));
        let mut zero = EarlyStopState::new(1, 0);
        zero.update(0.5);
        assert!(zero.update(0.4).stop);
    }

    #[test]
    fn filter_follows_hierarchy() {
        let rows = crate::data::read_tsv(
            "id\ttweet\tsubtask_a\tsubtask_b\tsubtask_c\n\
             1\ta\tNOT\tNULL\tNULL\n\
             2\tb\tOFF\tUNT\tNULL\n\
             3\tc\tOFF\tTIN\tGRP\n\
             4\td\tOFF\tTIN\tIND\n"
                .as_bytes(),
            "t",
        )
        .unwrap();
        assert_eq!(hierarchical_filter(&rows, Task::A).len(), 4);
        let b = hierarchical_filter(&rows, Task::B);
        assert_eq!(b.len(), 3);
        assert!(b.iter().all(|t| t.label_a == Some(LabelA::Off)));
        assert_eq!(hierarchical_filter(&rows, Task::C).len(), 2);
    }

    #[test]
    fn history_format() {
        let rec = EpochRecord {
            epoch: 1,
            train_loss: 0.5,
            train_f1: 0.25,
            val_f1: Some(1.0),
            val_acc: None,
        };
        assert_eq!(
            history_csv(&[rec]),
            format!("{HISTORY_HEADER}\n1,0.500000,0.250000,1.000000,\n")
        );
    }

    proptest! {
        #[test]
        fn weights_reweight_without_rescaling(labels in prop::collection::vec(0usize..3, 1..200)) {
            let w = compute_class_weights(&labels, 3, WeightMode::Normalized);
            prop_assert!(w.iter().all(|&x| x > 0.0));
            let total: f64 = labels.iter().map(|&l| w[l]).sum();
            prop_assert!((total - labels.len() as f64).abs() < 1e-9 * labels.len() as f64);
        }

        #[test]
        fn split_preserves_class_proportions(labels in prop::collection::vec(0usize..3, 1..300), seed in 0u64..50) {
            let spec = SplitSpec { seed, ..SplitSpec::default() };
            let (train, val) = stratified_split(&labels, &spec).unwrap();
            prop_assert_eq!(train.len() + val.len(), labels.len());
            prop_assert_eq!(train.len(), (labels.len() as f64 * 0.8).round() as usize);
            for c in 0..3 {
                let n = labels.iter().filter(|&&l| l == c).count() as f64;
                let t = train.iter().filter(|&&i| labels[i] == c).count() as f64;
                prop_assert!((t - 0.8 * n).abs() < 1.0 + 1e-9);
            }
        }

        #[test]
        fn best_average_never_decreases(scores in prop::collection::vec(0.0f64..1.0, 1..40)) {
            let mut s = EarlyStopState::new(5, 100);
            let mut prev = f64::MIN;
            for v in scores {
                s.update(v);
                let b = s.best_average().unwrap();
                prop_assert!(b >= prev);
                prev = b;
            }
        }
    }
}
