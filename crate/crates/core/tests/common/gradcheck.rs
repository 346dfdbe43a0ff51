//! Central finite-difference gradient checks in `f64`.

use offtweet::neural::{HasParams, Tensor2};

pub const STEP: f64 = 1e-3;
/// Magnitude below which gradients are compared absolutely rather than
/// relatively.
pub const FLOOR: f64 = 1e-6;

pub fn rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(FLOOR)
}

/// Above this disagreement between the step-`h` and step-`h/2` central
/// differences, the window straddles a kink (ReLU, max routing) and the
/// difference quotient is not a derivative estimate.
pub const KINK_TOL: f64 = 1e-3;

#[derive(Debug, Default, Clone)]
pub struct Report {
    pub errors: Vec<f64>,
    pub worst: Option<(String, f64, f64)>,
    /// Coordinates left out because their difference window holds a kink.
    pub kinks: usize,
}

/// Central difference of `f` at steps `h` and, when `analytic` disagrees
/// with it, `h/2`. Returns `None` for a kink.
fn difference(analytic: f64, mut f: impl FnMut(f64) -> f64) -> Option<f64> {
    let d = (f(STEP) - f(-STEP)) / (2.0 * STEP);
    if rel_err(analytic, d) <= 1e-4 {
        return Some(d);
    }
    let half = (f(STEP / 2.0) - f(-STEP / 2.0)) / STEP;
    (rel_err(d, half) <= KINK_TOL).then_some(d)
}

impl Report {
    fn record(&mut self, name: &str, analytic: f64, numeric: Option<f64>) {
        match numeric {
            Some(n) => self.push(name, analytic, n),
            None => self.kinks += 1,
        }
    }

    pub fn push(&mut self, name: &str, analytic: f64, numeric: f64) {
        let e = rel_err(analytic, numeric);
        if self.worst.as_ref().is_none_or(|_| e > self.max()) {
            self.worst = Some((name.to_owned(), analytic, numeric));
        }
        self.errors.push(e);
    }

    pub fn extend(&mut self, other: Report) {
        if other.max() > self.max() {
            self.worst = other.worst.clone();
        }
        self.errors.extend(other.errors);
        self.kinks += other.kinks;
    }

    pub fn max(&self) -> f64 {
        self.errors.iter().copied().fold(0.0, f64::max)
    }

    /// 99th percentile (nearest rank).
    pub fn p99(&self) -> f64 {
        if self.errors.is_empty() {
            return 0.0;
        }
        let mut v = self.errors.clone();
        v.sort_by(f64::total_cmp);
        let rank = ((0.99 * v.len() as f64).ceil() as usize).clamp(1, v.len());
        v[rank - 1]
    }

    pub fn passes(&self) -> bool {
        self.p99() < 1e-4 && self.max() < 1e-2
    }

    pub fn summary(&self) -> String {
        format!(
            "{} coords ({} at kinks), p99 {:.2e}, max {:.2e}, worst {:?}",
            self.errors.len(),
            self.kinks,
            self.p99(),
            self.max(),
            self.worst
        )
    }
}

/// Compares the gradients `analytic` leaves in `model`'s parameters with
/// central differences of `loss`. Frozen rows and untrainable tensors are
/// skipped.
pub fn check_params<M: HasParams<f64>>(
    model: &mut M,
    loss: impl Fn(&M) -> f64,
    analytic: impl FnOnce(&mut M),
) -> Report {
    model.zero_grad();
    analytic(model);
    let grads: Vec<(String, Vec<f64>, usize, bool)> = model
        .params()
        .iter()
        .map(|p| {
            (
                p.name.clone(),
                p.grad.data().to_vec(),
                p.frozen_rows * p.value.cols(),
                p.trainable,
            )
        })
        .collect();
    let mut report = Report::default();
    for (k, (name, grad, skip, trainable)) in grads.iter().enumerate() {
        if !trainable {
            continue;
        }
        for i in *skip..grad.len() {
            let orig = model.params()[k].value.data()[i];
            let numeric = difference(grad[i], |dv| {
                model.params_mut()[k].value.data_mut()[i] = orig + dv;
                let l = loss(model);
                model.params_mut()[k].value.data_mut()[i] = orig;
                l
            });
            report.record(&format!("{name}[{i}]"), grad[i], numeric);
        }
    }
    report
}

/// Compares `dx` with central differences of `loss` in the input.
pub fn check_input(x: &Tensor2<f64>, dx: &Tensor2<f64>, loss: impl Fn(&Tensor2<f64>) -> f64) -> Report {
    let mut report = Report::default();
    let mut probe = x.clone();
    for i in 0..x.data().len() {
        let orig = x.data()[i];
        let numeric = difference(dx.data()[i], |dv| {
            probe.data_mut()[i] = orig + dv;
            let l = loss(&probe);
            probe.data_mut()[i] = orig;
            l
        });
        report.record(&format!("input[{i}]"), dx.data()[i], numeric);
    }
    report
}

/// Moves every parameter by a uniform offset in ±`scale`, so the check
/// runs at a generic point rather than at zero-initialised biases (where
/// an all-zero input window sits exactly on a ReLU kink).
pub fn jitter<M: HasParams<f64>>(model: &mut M, scale: f64, seed: u64) {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    for p in model.params_mut() {
        let skip = p.frozen_rows * p.value.cols();
        for v in &mut p.value.data_mut()[skip..] {
            *v += rng.random_range(-scale..scale);
        }
    }
}

/// Fixed random projection turning a tensor output into a scalar loss.
pub fn projection(rows: usize, cols: usize, seed: u64) -> Tensor2<f64> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    offtweet::neural::init::uniform_limit(rows, cols, 1.0, &mut rng)
}

pub fn project(y: &Tensor2<f64>, r: &Tensor2<f64>) -> f64 {
    y.data().iter().zip(r.data()).map(|(a, b)| a * b).sum()
}
