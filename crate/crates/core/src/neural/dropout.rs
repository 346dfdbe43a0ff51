use rand::Rng;

use super::tensor::{Scalar, Tensor2};

/// Drops whole timestep rows (whole words) with probability `rate`, scaling
/// survivors by `1 / (1 − rate)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatialDropout {
    pub rate: f64,
}

impl SpatialDropout {
    pub fn new(rate: f64) -> Self {
        assert!((0.0..1.0).contains(&rate), "dropout rate must lie in [0, 1)");
        SpatialDropout { rate }
    }

    /// Per-row multipliers: `0` or `1 / (1 − rate)`.
    pub fn sample_mask<F: Scalar, R: Rng>(&self, rows: usize, rng: &mut R) -> Vec<F> {
        let keep = F::from_f64_lossy(1.0 / (1.0 - self.rate));
        (0..rows)
            .map(|_| {
                if rng.random::<f64>() < self.rate {
                    F::zero()
                } else {
                    keep
                }
            })
            .collect()
    }

    /// Returns the output and the mask used (`None` when it is an identity).
    pub fn forward<F: Scalar, R: Rng>(
        &self,
        x: &Tensor2<F>,
        training: bool,
        rng: &mut R,
    ) -> (Tensor2<F>, Option<Vec<F>>) {
        if !training || self.rate == 0.0 {
            return (x.clone(), None);
        }
        let mask = self.sample_mask(x.rows(), rng);
        (apply_row_mask(x, &mask), Some(mask))
    }

    pub fn backward<F: Scalar>(&self, mask: Option<&[F]>, dy: &Tensor2<F>) -> Tensor2<F> {
        match mask {
            Some(m) => apply_row_mask(dy, m),
            None => dy.clone(),
        }
    }
}

pub fn apply_row_mask<F: Scalar>(x: &Tensor2<F>, mask: &[F]) -> Tensor2<F> {
    let mut out = x.clone();
    for (t, &m) in mask.iter().enumerate() {
        out.row_mut(t).iter_mut().for_each(|v| *v *= m);
    }
    out
}
