//! Class-weighted cross-entropy losses. Probabilities are clamped to
//! `[1e-7, 1 − 1e-7]`; where the clamp is active the gradient is zero.

use super::tensor::Scalar;

pub const PROB_EPS: f64 = 1e-7;

fn clamp<F: Scalar>(p: F) -> (F, bool) {
    let lo = F::from_f64_lossy(PROB_EPS);
    let hi = F::one() - lo;
    if p < lo {
        (lo, true)
    } else if p > hi {
        (hi, true)
    } else {
        (p, false)
    }
}

/// `−w[y]·(y ln ŷ + (1 − y) ln(1 − ŷ))` and its derivative wrt `ŷ`.
pub fn weighted_bce<F: Scalar>(y_pred: F, y_true: usize, weights: &[F]) -> (F, F) {
    let w = weights[y_true];
    let (p, clamped) = clamp(y_pred);
    let one = F::one();
    if y_true == 1 {
        (-w * p.ln(), if clamped { F::zero() } else { -w / p })
    } else {
        (-w * (one - p).ln(), if clamped { F::zero() } else { w / (one - p) })
    }
}

/// `−w[c]·ln ŷ[c]` for true class `c`, and its gradient wrt `ŷ`.
pub fn weighted_cce<F: Scalar>(y_pred: &[F], y_true: usize, weights: &[F]) -> (F, Vec<F>) {
    let w = weights[y_true];
    let (p, clamped) = clamp(y_pred[y_true]);
    let mut grad = vec![F::zero(); y_pred.len()];
    if !clamped {
        grad[y_true] = -w / p;
    }
    (-w * p.ln(), grad)
}
