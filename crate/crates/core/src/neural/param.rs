use super::tensor::{Scalar, Tensor2};

/// A named trainable tensor with its accumulated gradient.
#[derive(Clone, Debug, PartialEq)]
pub struct Param<F> {
    pub name: String,
    pub value: Tensor2<F>,
    pub grad: Tensor2<F>,
    /// Whether the optimizer updates this tensor at all.
    pub trainable: bool,
    /// Number of leading rows the optimizer never touches.
    pub frozen_rows: usize,
}

impl<F: Scalar> Param<F> {
    pub fn new(name: impl Into<String>, value: Tensor2<F>) -> Self {
        let (r, c) = value.shape();
        Param {
            name: name.into(),
            value,
            grad: Tensor2::zeros(r, c),
            trainable: true,
            frozen_rows: 0,
        }
    }

    pub fn zero_grad(&mut self) {
        self.grad.fill(F::zero());
    }

    pub fn len(&self) -> usize {
        self.value.data().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Anything owning parameters.
pub trait HasParams<F: Scalar> {
    fn params(&self) -> Vec<&Param<F>>;
    fn params_mut(&mut self) -> Vec<&mut Param<F>>;

    fn zero_grad(&mut self) {
        for p in self.params_mut() {
            p.zero_grad();
        }
    }

    fn num_params(&self) -> usize {
        self.params().iter().map(|p| p.len()).sum()
    }
}
