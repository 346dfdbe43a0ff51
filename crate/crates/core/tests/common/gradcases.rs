use offtweet::models::{Head, Hyper, Network, Variant};
use offtweet::neural::init::uniform_limit;
use offtweet::neural::{
    global_avg_pool, global_avg_pool_backward, global_max_pool, global_max_pool_backward, weighted_bce, weighted_cce,
    Activation, BiMode, Bidirectional, Conv1d, Dense, EmbeddingLayer, Gru, HasParams, Lstm, MaxPool1d, SequenceCell,
    SpatialDropout, Tensor2,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::gradcheck::{check_input, check_params, jitter, project, projection, Report};

fn input(rows: usize, cols: usize, seed: u64) -> Tensor2<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    uniform_limit(rows, cols, 1.0, &mut rng)
}

fn toy() -> Hyper {
    Hyper {
        seq_len: 6,
        embed_dim: 5,
        units: 4,
        dropout: 0.5,
        bidirectional: true,
        conv_width: 2,
        filters: 3,
        pool: 2,
        pool_stride: 2,
    }
}

fn network_report(variant: Variant, head: Head, seed: u64) -> Report {
    let mut net = Network::<f64>::build(variant, head, toy(), seed).unwrap();
    jitter(&mut net, 0.1, seed + 300);
    let x = input(6, 5, seed + 100);
    let mut rng = ChaCha8Rng::seed_from_u64(seed + 200);
    let mask = net.sample_mask(&mut rng);
    let y = (seed as usize) % head.num_classes();
    let w = vec![0.8, 1.7, 1.1];
    let loss = |n: &Network<f64>, x: &Tensor2<f64>| {
        let (p, _) = n.forward(x, mask.as_deref()).unwrap();
        head.loss(&p, y, &w).0
    };
    let mut dx = None;
    let mut report = check_params(
        &mut net,
        |n| loss(n, &x),
        |n| {
            let (p, cache) = n.forward(&x, mask.as_deref()).unwrap();
            let (_, g) = head.loss(&p, y, &w);
            dx = Some(n.backward(&cache, &g));
        },
    );
    report.extend(check_input(&x, &dx.unwrap(), |x| loss(&net, x)));
    report
}

/// One architecture and head over ten seeds.
pub fn architecture(v: Variant, head: Head) -> Report {
    let mut all = Report::default();
    for seed in 0..10 {
        all.extend(network_report(v, head, seed));
    }
    all
}

fn seq_report<C: SequenceCell<f64> + Clone>(cell: C, mode: BiMode, bidir: Option<C>, seed: u64) -> Report {
    let mut bi = Bidirectional::new(cell, bidir, mode);
    let x = input(6, 5, seed);
    let (y, _) = bi.forward(&x);
    let r = projection(y.rows(), y.cols(), seed + 1);
    let mut dx = None;
    let mut report = check_params(
        &mut bi,
        |b| project(&b.forward(&x).0, &r),
        |b| {
            let (_, c) = b.forward(&x);
            dx = Some(b.backward(&c, &r));
        },
    );
    report.extend(check_input(&x, &dx.unwrap(), |x| project(&bi.forward(x).0, &r)));
    report
}

pub fn recurrent_layers() -> (Report, Report) {
    let mut lstm = Report::default();
    let mut gru = Report::default();
    for seed in 0..10 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for mode in [BiMode::Sequence, BiMode::Last] {
            let f = Lstm::<f64>::new("f", 5, 4, &mut rng);
            let b = Lstm::<f64>::new("b", 5, 4, &mut rng);
            lstm.extend(seq_report(f, mode, Some(b), seed));
            let f = Gru::<f64>::new("f", 5, 4, &mut rng);
            let b = Gru::<f64>::new("b", 5, 4, &mut rng);
            gru.extend(seq_report(f, mode, Some(b), seed));
        }
    }
    (lstm, gru)
}

/// Tolerances met with at most 5% of coordinates excluded as kinks.
pub fn acceptable(r: &Report) -> bool {
    r.passes() && r.kinks * 20 <= r.errors.len()
}

/// Parameter-free layer: compares `backward(r)` with differences of `r·forward(x)`.
fn stateless(
    x: &Tensor2<f64>,
    fwd: impl Fn(&Tensor2<f64>) -> Tensor2<f64>,
    bwd: impl Fn(&Tensor2<f64>) -> Tensor2<f64>,
    seed: u64,
) -> Report {
    let y = fwd(x);
    let r = projection(y.rows(), y.cols(), seed);
    check_input(x, &bwd(&r), |x| project(&fwd(x), &r))
}

pub fn dense_layer(act: Activation) -> Report {
    let mut all = Report::default();
    for seed in 0..10 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut d = Dense::<f64>::new("d", 5, 3, act, &mut rng);
        jitter(&mut d, 0.1, seed);
        let x = input(1, 5, seed + 50);
        let r = projection(1, 3, seed + 60);
        let mut dx = None;
        let mut rep = check_params(
            &mut d,
            |d| project(&Tensor2::row_vector(d.forward(x.data()).0), &r),
            |d| {
                let (_, c) = d.forward(x.data());
                dx = Some(Tensor2::row_vector(d.backward(&c, r.data())));
            },
        );
        rep.extend(check_input(&x, &dx.unwrap(), |x| {
            project(&Tensor2::row_vector(d.forward(x.data()).0), &r)
        }));
        all.extend(rep);
    }
    all
}

pub fn unidirectional_recurrence() -> Report {
    let mut all = Report::default();
    for seed in 0..10 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        all.extend(seq_report(
            Lstm::<f64>::new("f", 5, 4, &mut rng),
            BiMode::Last,
            None,
            seed,
        ));
        all.extend(seq_report(
            Gru::<f64>::new("f", 5, 4, &mut rng),
            BiMode::Sequence,
            None,
            seed,
        ));
    }
    all
}

pub fn convolution() -> Report {
    let mut all = Report::default();
    for seed in 0..10 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut conv = Conv1d::<f64>::new("c", 2, 5, 3, &mut rng);
        jitter(&mut conv, 0.1, seed);
        let x = input(6, 5, seed + 10);
        let r = projection(5, 3, seed + 20);
        let mut dx = None;
        let mut rep = check_params(
            &mut conv,
            |c| project(&c.forward(&x).0, &r),
            |c| {
                let (_, cache) = c.forward(&x);
                dx = Some(c.backward(&cache, &r));
            },
        );
        rep.extend(check_input(&x, &dx.unwrap(), |x| project(&conv.forward(x).0, &r)));
        all.extend(rep);
    }
    all
}

pub fn pooling() -> Report {
    let mut all = Report::default();
    for seed in 0..10 {
        let x = input(6, 3, seed);
        let pool = MaxPool1d::new(2, 2);
        all.extend(stateless(
            &x,
            |x| pool.forward(x).0,
            |r| pool.backward(&pool.forward(&x).1, r),
            seed + 1,
        ));
        all.extend(stateless(
            &x,
            |x| Tensor2::row_vector(global_max_pool(x).0),
            |r| global_max_pool_backward(&global_max_pool(&x).1, r.data()),
            seed + 2,
        ));
        all.extend(stateless(
            &x,
            |x| Tensor2::row_vector(global_avg_pool(x)),
            |r| global_avg_pool_backward(x.rows(), r.data()),
            seed + 3,
        ));
    }
    all
}

pub fn spatial_dropout_with_fixed_mask() -> Report {
    let mut all = Report::default();
    let drop = SpatialDropout::new(0.5);
    for seed in 0..10 {
        let x = input(6, 5, seed);
        let mask: Vec<f64> = drop.sample_mask(6, &mut ChaCha8Rng::seed_from_u64(seed));
        all.extend(stateless(
            &x,
            |x| offtweet::neural::dropout::apply_row_mask(x, &mask),
            |r| drop.backward(Some(&mask), r),
            seed + 1,
        ));
    }
    all
}

pub fn embedding_lookup() -> Report {
    let mut all = Report::default();
    for seed in 0..10 {
        let mut e = EmbeddingLayer::new(input(7, 5, seed), true);
        let ids = [3, 0, 6, 3, 1, 2];
        let r = projection(6, 5, seed + 1);
        all.extend(check_params(
            &mut e,
            |e| project(&e.forward(&ids), &r),
            |e| e.backward(&ids, &r),
        ));
        assert!(e.params()[0].grad.row(0).iter().all(|&g| g == 0.0));
    }
    all
}

pub fn losses() -> Report {
    let mut all = Report::default();
    for seed in 0..10 {
        let p = input(1, 3, seed)
            .data()
            .iter()
            .map(|v| 0.5 + 0.45 * v)
            .collect::<Vec<_>>();
        let w = [0.6, 2.5, 1.3];
        for y in 0..2 {
            let x = Tensor2::row_vector(vec![p[0]]);
            let (_, g) = weighted_bce(p[0], y, &w);
            all.extend(check_input(&x, &Tensor2::row_vector(vec![g]), |x| {
                weighted_bce(x.data()[0], y, &w).0
            }));
        }
        let x = Tensor2::row_vector(p.clone());
        for y in 0..3 {
            let (_, g) = weighted_cce(&p, y, &w);
            all.extend(check_input(&x, &Tensor2::row_vector(g), |x| {
                weighted_cce(x.data(), y, &w).0
            }));
        }
    }
    all
}

/// Every suite by name: the four architectures under both heads, then each layer.
pub fn all_suites() -> Vec<(String, Report)> {
    let mut out = Vec::new();
    for v in Variant::ALL {
        for head in [Head::Binary, Head::Ternary] {
            out.push((format!("{v} {head}"), architecture(v, head)));
        }
    }
    let (lstm, gru) = recurrent_layers();
    out.push(("bilstm".into(), lstm));
    out.push(("bigru".into(), gru));
    out.push(("unidirectional recurrence".into(), unidirectional_recurrence()));
    for act in [
        Activation::Sigmoid,
        Activation::Softmax,
        Activation::Relu,
        Activation::None,
    ] {
        out.push((format!("dense {act:?}"), dense_layer(act)));
    }
    out.push(("conv1d".into(), convolution()));
    out.push(("pooling".into(), pooling()));
    out.push(("spatial dropout".into(), spatial_dropout_with_fixed_mask()));
    out.push(("embedding".into(), embedding_lookup()));
    out.push(("losses".into(), losses()));
    out
}
