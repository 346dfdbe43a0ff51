//! Temporal convolution and pooling over `T × C` sequences.

use rand::Rng;

use super::init::he_uniform;
use super::param::{HasParams, Param};
use super::tensor::{axpy, vec_mat_acc, Scalar, Tensor2};

/// Valid (unpadded) 1-D convolution with ReLU. The kernel is stored as
/// `(k·C_in) × C_out`, so a window of `k` consecutive rows of the row-major
/// input is one contiguous vector.
#[derive(Debug, Clone)]
pub struct Conv1d<F> {
    pub kernel: Param<F>,
    pub bias: Param<F>,
    pub width: usize,
    pub relu: bool,
}

#[derive(Debug, Clone)]
pub struct ConvCache<F> {
    x: Tensor2<F>,
    out: Tensor2<F>,
}

/// Output length of a valid convolution, if any.
pub fn conv_output_len(p: usize, width: usize) -> Option<usize> {
    (width > 0 && p >= width).then(|| p - width + 1)
}

impl<F: Scalar> Conv1d<F> {
    pub fn new<R: Rng>(name: &str, width: usize, c_in: usize, c_out: usize, rng: &mut R) -> Self {
        Conv1d {
            kernel: Param::new(
                format!("{name}.kernel"),
                he_uniform(width * c_in, c_out, width * c_in, rng),
            ),
            bias: Param::new(format!("{name}.bias"), Tensor2::zeros(1, c_out)),
            width,
            relu: true,
        }
    }

    pub fn from_parts(width: usize, kernel: Tensor2<F>, bias: Vec<F>, relu: bool) -> Self {
        Conv1d {
            kernel: Param::new("conv.kernel", kernel),
            bias: Param::new("conv.bias", Tensor2::row_vector(bias)),
            width,
            relu,
        }
    }

    pub fn in_channels(&self) -> usize {
        self.kernel.value.rows() / self.width
    }

    pub fn out_channels(&self) -> usize {
        self.kernel.value.cols()
    }

    pub fn forward(&self, x: &Tensor2<F>) -> (Tensor2<F>, ConvCache<F>) {
        assert_eq!(x.cols(), self.in_channels(), "conv input channels");
        let len = conv_output_len(x.rows(), self.width).expect("sequence shorter than kernel");
        let mut out = Tensor2::zeros(len, self.out_channels());
        for t in 0..len {
            let row = out.row_mut(t);
            row.copy_from_slice(self.bias.value.data());
            vec_mat_acc(x.rows_slice(t, t + self.width), &self.kernel.value, row);
            if self.relu {
                row.iter_mut().for_each(|v| *v = v.max(F::zero()));
            }
        }
        let cache = ConvCache {
            x: x.clone(),
            out: out.clone(),
        };
        (out, cache)
    }

    pub fn backward(&mut self, cache: &ConvCache<F>, dy: &Tensor2<F>) -> Tensor2<F> {
        let c_in = self.in_channels();
        let mut dx = Tensor2::zeros(cache.x.rows(), cache.x.cols());
        let mut dz = vec![F::zero(); self.out_channels()];
        for t in 0..cache.out.rows() {
            for (j, d) in dz.iter_mut().enumerate() {
                let g = dy.get(t, j);
                *d = if !self.relu || cache.out.get(t, j) > F::zero() {
                    g
                } else {
                    F::zero()
                };
            }
            super::tensor::outer_acc(cache.x.rows_slice(t, t + self.width), &dz, &mut self.kernel.grad);
            axpy(F::one(), &dz, self.bias.grad.data_mut());
            let k = &self.kernel.value;
            let window = &mut dx.data_mut()[t * c_in..(t + self.width) * c_in];
            for (r, w) in window.iter_mut().enumerate() {
                *w += k.row(r).iter().zip(&dz).map(|(&a, &b)| a * b).sum();
            }
        }
        dx
    }
}

impl<F: Scalar> HasParams<F> for Conv1d<F> {
    fn params(&self) -> Vec<&Param<F>> {
        vec![&self.kernel, &self.bias]
    }

    fn params_mut(&mut self) -> Vec<&mut Param<F>> {
        vec![&mut self.kernel, &mut self.bias]
    }
}

/// Windowed max along time, per channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MaxPool1d {
    pub pool: usize,
    pub stride: usize,
}

#[derive(Debug, Clone)]
pub struct PoolCache {
    rows: usize,
    /// Source row of each output element, row-major like the output.
    argmax: Vec<usize>,
}

impl MaxPool1d {
    pub fn new(pool: usize, stride: usize) -> Self {
        MaxPool1d { pool, stride }
    }

    pub fn output_len(&self, t: usize) -> Option<usize> {
        (self.pool > 0 && self.stride > 0 && t >= self.pool).then(|| (t - self.pool) / self.stride + 1)
    }

    pub fn forward<F: Scalar>(&self, x: &Tensor2<F>) -> (Tensor2<F>, PoolCache) {
        let len = self.output_len(x.rows()).expect("sequence shorter than pool");
        let c = x.cols();
        let mut out = Tensor2::zeros(len, c);
        let mut argmax = vec![0; len * c];
        for o in 0..len {
            let start = o * self.stride;
            for j in 0..c {
                let mut best = start;
                for t in start + 1..start + self.pool {
                    if x.get(t, j) > x.get(best, j) {
                        best = t;
                    }
                }
                argmax[o * c + j] = best;
                out.set(o, j, x.get(best, j));
            }
        }
        (out, PoolCache { rows: x.rows(), argmax })
    }

    pub fn backward<F: Scalar>(&self, cache: &PoolCache, dy: &Tensor2<F>) -> Tensor2<F> {
        global_route(cache, dy)
    }
}

fn global_route<F: Scalar>(cache: &PoolCache, dy: &Tensor2<F>) -> Tensor2<F> {
    let c = dy.cols();
    let mut dx = Tensor2::zeros(cache.rows, c);
    for (idx, &src) in cache.argmax.iter().enumerate() {
        let j = idx % c;
        let v = dx.get(src, j) + dy.data()[idx];
        dx.set(src, j, v);
    }
    dx
}

/// Column-wise max over time; the gradient goes to the first maximal row.
pub fn global_max_pool<F: Scalar>(x: &Tensor2<F>) -> (Vec<F>, PoolCache) {
    let c = x.cols();
    let mut argmax = vec![0; c];
    for t in 1..x.rows() {
        for j in 0..c {
            if x.get(t, j) > x.get(argmax[j], j) {
                argmax[j] = t;
            }
        }
    }
    let out = (0..c).map(|j| x.get(argmax[j], j)).collect();
    (out, PoolCache { rows: x.rows(), argmax })
}

pub fn global_max_pool_backward<F: Scalar>(cache: &PoolCache, dy: &[F]) -> Tensor2<F> {
    global_route(cache, &Tensor2::row_vector(dy.to_vec()))
}

/// Column-wise mean over time.
pub fn global_avg_pool<F: Scalar>(x: &Tensor2<F>) -> Vec<F> {
    let mut out = vec![F::zero(); x.cols()];
    x.col_sums_acc(&mut out);
    let n = F::from_f64_lossy(x.rows() as f64);
    out.iter_mut().for_each(|v| *v /= n);
    out
}

pub fn global_avg_pool_backward<F: Scalar>(rows: usize, dy: &[F]) -> Tensor2<F> {
    let n = F::from_f64_lossy(rows as f64);
    let row: Vec<F> = dy.iter().map(|&g| g / n).collect();
    let mut dx = Tensor2::zeros(rows, dy.len());
    for t in 0..rows {
        dx.row_mut(t).copy_from_slice(&row);
    }
    dx
}
