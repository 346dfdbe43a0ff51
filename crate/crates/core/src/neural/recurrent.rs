//! LSTM and GRU over whole sequences with backpropagation through time,
//! and the bidirectional wrapper.

use rand::Rng;

use super::init::{glorot_uniform, orthogonal};
use super::param::{HasParams, Param};
use super::tensor::{axpy, sigmoid, Scalar, Tensor2};

fn dot<F: Scalar>(a: &[F], b: &[F]) -> F {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

/// A recurrent cell unrolled over a `p × D` input, producing `p × H` states.
pub trait SequenceCell<F: Scalar>: HasParams<F> {
    type Cache;

    fn input_dim(&self) -> usize;
    fn hidden(&self) -> usize;
    fn forward_seq(&self, x: &Tensor2<F>) -> (Tensor2<F>, Self::Cache);
    /// `dh` holds the loss gradient wrt every output state.
    fn backward_seq(&mut self, cache: &Self::Cache, dh: &Tensor2<F>) -> Tensor2<F>;
}

/// Gate layout along the `4H` axis is `[i, f, g, o]`.
#[derive(Debug, Clone)]
pub struct Lstm<F> {
    /// `D × 4H`
    pub kernel: Param<F>,
    /// `H × 4H`
    pub recurrent: Param<F>,
    /// `1 × 4H`
    pub bias: Param<F>,
}

#[derive(Debug, Clone)]
pub struct LstmCache<F> {
    x: Tensor2<F>,
    /// Activated gates per step, `p × 4H`.
    gates: Tensor2<F>,
    c: Tensor2<F>,
    h: Tensor2<F>,
}

impl<F: Scalar> Lstm<F> {
    pub fn new<R: Rng>(name: &str, input_dim: usize, hidden: usize, rng: &mut R) -> Self {
        let mut bias = Tensor2::zeros(1, 4 * hidden);
        bias.data_mut()[hidden..2 * hidden].fill(F::one());
        Lstm {
            kernel: Param::new(format!("{name}.kernel"), glorot_uniform(input_dim, 4 * hidden, rng)),
            recurrent: Param::new(format!("{name}.recurrent"), orthogonal(hidden, 4 * hidden, rng)),
            bias: Param::new(format!("{name}.bias"), bias),
        }
    }

    pub fn zeros(input_dim: usize, hidden: usize) -> Self {
        Lstm {
            kernel: Param::new("lstm.kernel", Tensor2::zeros(input_dim, 4 * hidden)),
            recurrent: Param::new("lstm.recurrent", Tensor2::zeros(hidden, 4 * hidden)),
            bias: Param::new("lstm.bias", Tensor2::zeros(1, 4 * hidden)),
        }
    }

    /// One step from `(h_prev, c_prev)`; returns `(h, c)`.
    pub fn step(&self, x: &[F], h_prev: &[F], c_prev: &[F]) -> (Vec<F>, Vec<F>) {
        let xt = Tensor2::row_vector(x.to_vec());
        let mut z = xt.matmul(&self.kernel.value).into_data();
        axpy(F::one(), self.bias.value.data(), &mut z);
        let (mut h, mut c) = (h_prev.to_vec(), c_prev.to_vec());
        self.cell(&mut z, &mut h, &mut c);
        (h, c)
    }

    /// Advances `(h, c)` in place given pre-activations `z` that already
    /// hold the input projection; leaves the activated gates in `z`.
    fn cell(&self, z: &mut [F], h: &mut [F], c: &mut [F]) {
        let hd = self.hidden();
        super::tensor::vec_mat_acc(h, &self.recurrent.value, z);
        for j in 0..hd {
            let i = sigmoid(z[j]);
            let f = sigmoid(z[hd + j]);
            let g = z[2 * hd + j].tanh();
            let o = sigmoid(z[3 * hd + j]);
            c[j] = f * c[j] + i * g;
            h[j] = o * c[j].tanh();
            z[j] = i;
            z[hd + j] = f;
            z[2 * hd + j] = g;
            z[3 * hd + j] = o;
        }
    }
}

impl<F: Scalar> HasParams<F> for Lstm<F> {
    fn params(&self) -> Vec<&Param<F>> {
        vec![&self.kernel, &self.recurrent, &self.bias]
    }

    fn params_mut(&mut self) -> Vec<&mut Param<F>> {
        vec![&mut self.kernel, &mut self.recurrent, &mut self.bias]
    }
}

impl<F: Scalar> SequenceCell<F> for Lstm<F> {
    type Cache = LstmCache<F>;

    fn input_dim(&self) -> usize {
        self.kernel.value.rows()
    }

    fn hidden(&self) -> usize {
        self.recurrent.value.rows()
    }

    fn forward_seq(&self, x: &Tensor2<F>) -> (Tensor2<F>, LstmCache<F>) {
        let (p, hd) = (x.rows(), self.hidden());
        let mut gates = x.matmul(&self.kernel.value);
        gates.add_row_bias(self.bias.value.data());
        let mut hs = Tensor2::zeros(p, hd);
        let mut cs = Tensor2::zeros(p, hd);
        let mut h = vec![F::zero(); hd];
        let mut c = vec![F::zero(); hd];
        for t in 0..p {
            self.cell(gates.row_mut(t), &mut h, &mut c);
            hs.row_mut(t).copy_from_slice(&h);
            cs.row_mut(t).copy_from_slice(&c);
        }
        let cache = LstmCache {
            x: x.clone(),
            gates,
            c: cs,
            h: hs.clone(),
        };
        (hs, cache)
    }

    fn backward_seq(&mut self, cache: &LstmCache<F>, dh_out: &Tensor2<F>) -> Tensor2<F> {
        let (p, hd) = (cache.x.rows(), self.hidden());
        let one = F::one();
        let zero_state = vec![F::zero(); hd];
        let mut dz_all = Tensor2::zeros(p, 4 * hd);
        let mut dh_next = vec![F::zero(); hd];
        let mut dc_next = vec![F::zero(); hd];
        for t in (0..p).rev() {
            let gates = cache.gates.row(t);
            let c = cache.c.row(t);
            let c_prev = if t > 0 { cache.c.row(t - 1) } else { &zero_state[..] };
            let h_prev = if t > 0 { cache.h.row(t - 1) } else { &zero_state[..] };
            let dz = dz_all.row_mut(t);
            for j in 0..hd {
                let (i, f, g, o) = (gates[j], gates[hd + j], gates[2 * hd + j], gates[3 * hd + j]);
                let dh = dh_out.get(t, j) + dh_next[j];
                let tc = c[j].tanh();
                let dc = dh * o * (one - tc * tc) + dc_next[j];
                dz[j] = dc * g * i * (one - i);
                dz[hd + j] = dc * c_prev[j] * f * (one - f);
                dz[2 * hd + j] = dc * i * (one - g * g);
                dz[3 * hd + j] = dh * tc * o * (one - o);
                dc_next[j] = dc * f;
            }
            super::tensor::outer_acc(h_prev, dz, &mut self.recurrent.grad);
            let u = &self.recurrent.value;
            for (k, d) in dh_next.iter_mut().enumerate() {
                *d = dot(u.row(k), dz);
            }
        }
        finish_input_grads(&cache.x, &dz_all, &mut self.kernel, &mut self.bias)
    }
}

/// Accumulates kernel and bias gradients from the per-step pre-activation
/// gradients and returns the gradient wrt the input sequence.
fn finish_input_grads<F: Scalar>(
    x: &Tensor2<F>,
    dz: &Tensor2<F>,
    kernel: &mut Param<F>,
    bias: &mut Param<F>,
) -> Tensor2<F> {
    x.matmul_tn_acc(dz, &mut kernel.grad);
    dz.col_sums_acc(bias.grad.data_mut());
    let w = &kernel.value;
    let mut dx = Tensor2::zeros(x.rows(), x.cols());
    for t in 0..x.rows() {
        let dzt = dz.row(t);
        for (d, out) in dx.row_mut(t).iter_mut().enumerate() {
            *out = dot(w.row(d), dzt);
        }
    }
    dx
}

/// Gate layout along the `3H` axis is `[z, r, h]`. The update gate weights
/// the candidate: `h = (1 − z)·h_prev + z·h̃`, with
/// `h̃ = tanh(W_h x + U_h (r ⊙ h_prev) + b_h)`.
#[derive(Debug, Clone)]
pub struct Gru<F> {
    /// `D × 3H`
    pub kernel: Param<F>,
    /// `H × 3H`
    pub recurrent: Param<F>,
    /// `1 × 3H`
    pub bias: Param<F>,
}

#[derive(Debug, Clone)]
pub struct GruCache<F> {
    x: Tensor2<F>,
    /// Activated `[z, r, h̃]` per step, `p × 3H`.
    gates: Tensor2<F>,
    h: Tensor2<F>,
}

impl<F: Scalar> Gru<F> {
    pub fn new<R: Rng>(name: &str, input_dim: usize, hidden: usize, rng: &mut R) -> Self {
        Gru {
            kernel: Param::new(format!("{name}.kernel"), glorot_uniform(input_dim, 3 * hidden, rng)),
            recurrent: Param::new(format!("{name}.recurrent"), orthogonal(hidden, 3 * hidden, rng)),
            bias: Param::new(format!("{name}.bias"), Tensor2::zeros(1, 3 * hidden)),
        }
    }

    pub fn zeros(input_dim: usize, hidden: usize) -> Self {
        Gru {
            kernel: Param::new("gru.kernel", Tensor2::zeros(input_dim, 3 * hidden)),
            recurrent: Param::new("gru.recurrent", Tensor2::zeros(hidden, 3 * hidden)),
            bias: Param::new("gru.bias", Tensor2::zeros(1, 3 * hidden)),
        }
    }

    pub fn step(&self, x: &[F], h_prev: &[F]) -> Vec<F> {
        let xt = Tensor2::row_vector(x.to_vec());
        let mut a = xt.matmul(&self.kernel.value).into_data();
        axpy(F::one(), self.bias.value.data(), &mut a);
        let mut h = h_prev.to_vec();
        self.cell(&mut a, &mut h);
        h
    }

    fn cell(&self, a: &mut [F], h: &mut [F]) {
        let hd = self.hidden();
        let u = &self.recurrent.value;
        for (k, &hk) in h.iter().enumerate() {
            if hk != F::zero() {
                axpy(hk, &u.row(k)[..2 * hd], &mut a[..2 * hd]);
            }
        }
        for j in 0..2 * hd {
            a[j] = sigmoid(a[j]);
        }
        for k in 0..hd {
            let rh = a[hd + k] * h[k];
            if rh != F::zero() {
                axpy(rh, &u.row(k)[2 * hd..], &mut a[2 * hd..]);
            }
        }
        for j in 0..hd {
            let cand = a[2 * hd + j].tanh();
            a[2 * hd + j] = cand;
            let z = a[j];
            h[j] = (F::one() - z) * h[j] + z * cand;
        }
    }
}

impl<F: Scalar> HasParams<F> for Gru<F> {
    fn params(&self) -> Vec<&Param<F>> {
        vec![&self.kernel, &self.recurrent, &self.bias]
    }

    fn params_mut(&mut self) -> Vec<&mut Param<F>> {
        vec![&mut self.kernel, &mut self.recurrent, &mut self.bias]
    }
}

impl<F: Scalar> SequenceCell<F> for Gru<F> {
    type Cache = GruCache<F>;

    fn input_dim(&self) -> usize {
        self.kernel.value.rows()
    }

    fn hidden(&self) -> usize {
        self.recurrent.value.rows()
    }

    fn forward_seq(&self, x: &Tensor2<F>) -> (Tensor2<F>, GruCache<F>) {
        let (p, hd) = (x.rows(), self.hidden());
        let mut gates = x.matmul(&self.kernel.value);
        gates.add_row_bias(self.bias.value.data());
        let mut hs = Tensor2::zeros(p, hd);
        let mut h = vec![F::zero(); hd];
        for t in 0..p {
            self.cell(gates.row_mut(t), &mut h);
            hs.row_mut(t).copy_from_slice(&h);
        }
        let cache = GruCache {
            x: x.clone(),
            gates,
            h: hs.clone(),
        };
        (hs, cache)
    }

    fn backward_seq(&mut self, cache: &GruCache<F>, dh_out: &Tensor2<F>) -> Tensor2<F> {
        let (p, hd) = (cache.x.rows(), self.hidden());
        let one = F::one();
        let zero_state = vec![F::zero(); hd];
        let mut da_all = Tensor2::zeros(p, 3 * hd);
        let mut dh_next = vec![F::zero(); hd];
        let mut rh = vec![F::zero(); hd];
        let mut drh = vec![F::zero(); hd];
        for t in (0..p).rev() {
            let gates = cache.gates.row(t);
            let h_prev = if t > 0 { cache.h.row(t - 1) } else { &zero_state[..] };
            let dh: Vec<F> = (0..hd).map(|j| dh_out.get(t, j) + dh_next[j]).collect();
            let da = da_all.row_mut(t);
            for j in 0..hd {
                let (z, cand) = (gates[j], gates[2 * hd + j]);
                da[j] = dh[j] * (cand - h_prev[j]) * z * (one - z);
                da[2 * hd + j] = dh[j] * z * (one - cand * cand);
                dh_next[j] = dh[j] * (one - z);
                rh[j] = gates[hd + j] * h_prev[j];
            }
            let u = &self.recurrent.value;
            for k in 0..hd {
                drh[k] = dot(&u.row(k)[2 * hd..], &da[2 * hd..]);
            }
            for j in 0..hd {
                let r = gates[hd + j];
                da[hd + j] = drh[j] * h_prev[j] * r * (one - r);
                dh_next[j] += drh[j] * r;
            }
            for k in 0..hd {
                dh_next[k] += dot(&u.row(k)[..2 * hd], &da[..2 * hd]);
            }
            let g = &mut self.recurrent.grad;
            for k in 0..hd {
                let row = g.row_mut(k);
                if h_prev[k] != F::zero() {
                    axpy(h_prev[k], &da[..2 * hd], &mut row[..2 * hd]);
                }
                if rh[k] != F::zero() {
                    axpy(rh[k], &da[2 * hd..], &mut row[2 * hd..]);
                }
            }
        }
        finish_input_grads(&cache.x, &da_all, &mut self.kernel, &mut self.bias)
    }
}

/// What a bidirectional layer emits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BiMode {
    /// `p × 2H`: row `t` is `[h_fwd(t), h_bwd(t)]`, where the backward
    /// state at `t` has seen inputs `t..p`.
    Sequence,
    /// `1 × 2H`: the final state of each direction.
    Last,
}

/// Runs one cell left-to-right and another right-to-left over the same
/// input and concatenates. Without a backward cell it is unidirectional.
#[derive(Debug, Clone)]
pub struct Bidirectional<C> {
    pub forward: C,
    pub backward: Option<C>,
    pub mode: BiMode,
}

#[derive(Debug, Clone)]
pub struct BiCache<F, K> {
    fwd: K,
    bwd: Option<K>,
    p: usize,
    _marker: std::marker::PhantomData<F>,
}

impl<C> Bidirectional<C> {
    pub fn new(forward: C, backward: Option<C>, mode: BiMode) -> Self {
        Bidirectional {
            forward,
            backward,
            mode,
        }
    }

    pub fn directions(&self) -> usize {
        1 + usize::from(self.backward.is_some())
    }

    pub fn output_width<F: Scalar>(&self) -> usize
    where
        C: SequenceCell<F>,
    {
        self.forward.hidden() * self.directions()
    }

    pub fn forward<F: Scalar>(&self, x: &Tensor2<F>) -> (Tensor2<F>, BiCache<F, C::Cache>)
    where
        C: SequenceCell<F>,
    {
        let p = x.rows();
        let hd = self.forward.hidden();
        let width = self.output_width::<F>();
        let (hf, cf) = self.forward.forward_seq(x);
        let bwd = self.backward.as_ref().map(|cell| cell.forward_seq(&x.reversed_rows()));
        let out = match self.mode {
            BiMode::Sequence => {
                let mut out = Tensor2::zeros(p, width);
                for t in 0..p {
                    out.row_mut(t)[..hd].copy_from_slice(hf.row(t));
                    if let Some((hb, _)) = &bwd {
                        out.row_mut(t)[hd..].copy_from_slice(hb.row(p - 1 - t));
                    }
                }
                out
            }
            BiMode::Last => {
                let mut out = Tensor2::zeros(1, width);
                if p > 0 {
                    out.row_mut(0)[..hd].copy_from_slice(hf.row(p - 1));
                    if let Some((hb, _)) = &bwd {
                        out.row_mut(0)[hd..].copy_from_slice(hb.row(p - 1));
                    }
                }
                out
            }
        };
        let cache = BiCache {
            fwd: cf,
            bwd: bwd.map(|(_, c)| c),
            p,
            _marker: std::marker::PhantomData,
        };
        (out, cache)
    }

    pub fn backward<F: Scalar>(&mut self, cache: &BiCache<F, C::Cache>, dy: &Tensor2<F>) -> Tensor2<F>
    where
        C: SequenceCell<F>,
    {
        let p = cache.p;
        let hd = self.forward.hidden();
        let mut dhf = Tensor2::zeros(p, hd);
        let mut dhb = Tensor2::zeros(p, hd);
        match self.mode {
            BiMode::Sequence => {
                for t in 0..p {
                    dhf.row_mut(t).copy_from_slice(&dy.row(t)[..hd]);
                    if self.backward.is_some() {
                        dhb.row_mut(p - 1 - t).copy_from_slice(&dy.row(t)[hd..]);
                    }
                }
            }
            BiMode::Last => {
                if p > 0 {
                    dhf.row_mut(p - 1).copy_from_slice(&dy.row(0)[..hd]);
                    if self.backward.is_some() {
                        dhb.row_mut(p - 1).copy_from_slice(&dy.row(0)[hd..]);
                    }
                }
            }
        }
        let mut dx = self.forward.backward_seq(&cache.fwd, &dhf);
        if let (Some(cell), Some(cb)) = (self.backward.as_mut(), cache.bwd.as_ref()) {
            let dx_rev = cell.backward_seq(cb, &dhb);
            dx.add_assign(&dx_rev.reversed_rows());
        }
        dx
    }
}

impl<F: Scalar, C: SequenceCell<F>> HasParams<F> for Bidirectional<C> {
    fn params(&self) -> Vec<&Param<F>> {
        let mut v = self.forward.params();
        if let Some(b) = &self.backward {
            v.extend(b.params());
        }
        v
    }

    fn params_mut(&mut self) -> Vec<&mut Param<F>> {
        let mut v = self.forward.params_mut();
        if let Some(b) = &mut self.backward {
            v.extend(b.params_mut());
        }
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sig(x: f64) -> f64 {
        1.0 / (1.0 + (-x).exp())
    }

    #[test]
    fn zero_lstm_stays_at_zero() {
        let cell = Lstm::<f64>::zeros(3, 2);
        let (h, c) = cell.step(&[1.0, -2.0, 0.5], &[0.0; 2], &[0.0; 2]);
        assert_eq!(h, vec![0.0; 2]);
        assert_eq!(c, vec![0.0; 2]);
    }

    #[test]
    fn lstm_scalar_hand_trace() {
        // D = H = 1, gates [i, f, g, o]
        let mut cell = Lstm::<f64>::zeros(1, 1);
        cell.kernel.value = Tensor2::row_vector(vec![0.5, -0.3, 0.8, 0.1]);
        cell.recurrent.value = Tensor2::row_vector(vec![0.2, 0.4, -0.6, 0.7]);
        cell.bias.value = Tensor2::row_vector(vec![0.1, 1.0, 0.0, -0.2]);
        let (x, h0, c0) = (2.0, 0.5, -1.0);
        let i = sig(0.5 * x + 0.2 * h0 + 0.1);
        let f = sig(-0.3 * x + 0.4 * h0 + 1.0);
        let g = (0.8 * x - 0.6 * h0).tanh();
        let o = sig(0.1 * x + 0.7 * h0 - 0.2);
        let c1 = f * c0 + i * g;
        let h1 = o * c1.tanh();
        let (h, c) = cell.step(&[x], &[h0], &[c0]);
        assert!((h[0] - h1).abs() < 1e-15 && (c[0] - c1).abs() < 1e-15);
    }

    #[test]
    fn zero_gru_halves_state() {
        let cell = Gru::<f64>::zeros(2, 3);
        let h = cell.step(&[0.3, 0.7], &[1.0, -2.0, 4.0]);
        assert_eq!(h, vec![0.5, -1.0, 2.0]);
    }

    #[test]
    fn gru_scalar_hand_trace() {
        let mut cell = Gru::<f64>::zeros(1, 1);
        cell.kernel.value = Tensor2::row_vector(vec![0.4, -0.5, 0.9]);
        cell.recurrent.value = Tensor2::row_vector(vec![0.3, 0.6, -0.8]);
        cell.bias.value = Tensor2::row_vector(vec![0.0, 0.2, -0.1]);
        let (x, h0) = (1.5, -0.4);
        let z = sig(0.4 * x + 0.3 * h0);
        let r = sig(-0.5 * x + 0.6 * h0 + 0.2);
        let cand = (0.9 * x - 0.8 * (r * h0) - 0.1).tanh();
        let h1 = (1.0 - z) * h0 + z * cand;
        assert!((cell.step(&[x], &[h0])[0] - h1).abs() < 1e-15);
    }

    #[test]
    fn palindrome_with_shared_weights_gives_equal_final_states() {
        let mut cell = Lstm::<f64>::zeros(1, 1);
        cell.kernel.value = Tensor2::row_vector(vec![0.5, -0.3, 0.8, 0.1]);
        cell.recurrent.value = Tensor2::row_vector(vec![0.2, 0.4, -0.6, 0.7]);
        let bi = Bidirectional::new(cell.clone(), Some(cell), BiMode::Last);
        let x = Tensor2::from_vec(3, 1, vec![1.0, -2.0, 1.0]).unwrap();
        let (out, _) = bi.forward(&x);
        assert_eq!(out.get(0, 0), out.get(0, 1));
    }

    #[test]
    fn single_step_bidirectional_is_concat_of_steps() {
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(5);
        let f = Gru::<f64>::new("f", 2, 2, &mut rng);
        let b = Gru::<f64>::new("b", 2, 2, &mut rng);
        let x = [0.3, -0.9];
        let expect: Vec<f64> = [f.step(&x, &[0.0; 2]), b.step(&x, &[0.0; 2])].concat();
        let bi = Bidirectional::new(f, Some(b), BiMode::Sequence);
        let (out, _) = bi.forward(&Tensor2::row_vector(x.to_vec()));
        assert_eq!(out.data(), &expect[..]);
    }

    #[test]
    fn three_step_scalar_trace_both_directions() {
        let mut f = Gru::<f64>::zeros(1, 1);
        f.kernel.value = Tensor2::row_vector(vec![0.4, -0.5, 0.9]);
        let mut b = Gru::<f64>::zeros(1, 1);
        b.kernel.value = Tensor2::row_vector(vec![-0.2, 0.3, 0.6]);
        b.recurrent.value = Tensor2::row_vector(vec![0.1, 0.1, 0.5]);
        let xs = [1.0, 0.0, -1.0];
        let mut hf = vec![0.0];
        let mut fwd = Vec::new();
        for &x in &xs {
            hf = f.step(&[x], &hf);
            fwd.push(hf[0]);
        }
        let mut hb = vec![0.0];
        let mut bwd = [0.0; 3];
        for t in (0..3).rev() {
            hb = b.step(&[xs[t]], &hb);
            bwd[t] = hb[0];
        }
        let bi = Bidirectional::new(f, Some(b), BiMode::Sequence);
        let (out, _) = bi.forward(&Tensor2::from_vec(3, 1, xs.to_vec()).unwrap());
        for t in 0..3 {
            assert!((out.get(t, 0) - fwd[t]).abs() < 1e-15);
            assert!((out.get(t, 1) - bwd[t]).abs() < 1e-15);
        }
    }
}
