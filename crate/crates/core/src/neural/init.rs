//! Weight initializers. Values are drawn in `f64` and converted, so `f32`
//! and `f64` instances built from the same seed agree up to rounding.

use rand::Rng;
use rand_distr::StandardNormal;

use super::tensor::{Scalar, Tensor2};

fn uniform<F: Scalar, R: Rng>(rows: usize, cols: usize, limit: f64, rng: &mut R) -> Tensor2<F> {
    let data = (0..rows * cols)
        .map(|_| F::from_f64_lossy(rng.random_range(-limit..limit)))
        .collect();
    Tensor2::from_vec(rows, cols, data).expect("shape matches data")
}

/// Uniform on ±√(6 / (fan_in + fan_out)) with fan_in = rows, fan_out = cols.
pub fn glorot_uniform<F: Scalar, R: Rng>(rows: usize, cols: usize, rng: &mut R) -> Tensor2<F> {
    let limit = (6.0 / (rows + cols) as f64).sqrt();
    uniform(rows, cols, limit, rng)
}

/// Uniform on ±√(6 / fan_in).
pub fn he_uniform<F: Scalar, R: Rng>(rows: usize, cols: usize, fan_in: usize, rng: &mut R) -> Tensor2<F> {
    let limit = (6.0 / fan_in as f64).sqrt();
    uniform(rows, cols, limit, rng)
}

/// Uniform on ±`limit`.
pub fn uniform_limit<F: Scalar, R: Rng>(rows: usize, cols: usize, limit: f64, rng: &mut R) -> Tensor2<F> {
    uniform(rows, cols, limit, rng)
}

/// Random matrix with orthonormal rows (when rows ≤ cols) or orthonormal
/// columns (otherwise), via Gram-Schmidt on a standard normal draw.
pub fn orthogonal<F: Scalar, R: Rng>(rows: usize, cols: usize, rng: &mut R) -> Tensor2<F> {
    let (n, len) = if rows <= cols { (rows, cols) } else { (cols, rows) };
    let mut vecs: Vec<Vec<f64>> = Vec::with_capacity(n);
    while vecs.len() < n {
        let mut v: Vec<f64> = (0..len).map(|_| rng.sample(StandardNormal)).collect();
        for u in &vecs {
            let d: f64 = v.iter().zip(u).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(u).for_each(|(a, b)| *a -= d * b);
        }
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm > 1e-10 {
            v.iter_mut().for_each(|a| *a /= norm);
            vecs.push(v);
        }
    }
    let mut out = Tensor2::zeros(rows, cols);
    for (i, v) in vecs.iter().enumerate() {
        for (j, &x) in v.iter().enumerate() {
            if rows <= cols {
                out.set(i, j, F::from_f64_lossy(x));
            } else {
                out.set(j, i, F::from_f64_lossy(x));
            }
        }
    }
    out
}
