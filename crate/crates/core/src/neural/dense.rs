use rand::Rng;

use super::init::glorot_uniform;
use super::param::{HasParams, Param};
use super::tensor::{sigmoid, vec_mat_acc, Scalar, Tensor2};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Sigmoid,
    Softmax,
    Relu,
    None,
}

impl Activation {
    pub fn apply<F: Scalar>(self, z: &mut [F]) {
        match self {
            Activation::Sigmoid => z.iter_mut().for_each(|v| *v = sigmoid(*v)),
            Activation::Relu => z.iter_mut().for_each(|v| *v = v.max(F::zero())),
            Activation::Softmax => {
                let max = z.iter().copied().fold(F::neg_infinity(), F::max);
                z.iter_mut().for_each(|v| *v = (*v - max).exp());
                let sum: F = z.iter().copied().sum();
                z.iter_mut().for_each(|v| *v /= sum);
            }
            Activation::None => {}
        }
    }

    /// Gradient wrt the pre-activation given the activated output `y` and
    /// the output gradient `dy`.
    pub fn backward<F: Scalar>(self, y: &[F], dy: &[F]) -> Vec<F> {
        match self {
            Activation::Sigmoid => y.iter().zip(dy).map(|(&y, &g)| g * y * (F::one() - y)).collect(),
            Activation::Relu => y
                .iter()
                .zip(dy)
                .map(|(&y, &g)| if y > F::zero() { g } else { F::zero() })
                .collect(),
            Activation::Softmax => {
                let dot: F = y.iter().zip(dy).map(|(&y, &g)| y * g).sum();
                y.iter().zip(dy).map(|(&y, &g)| y * (g - dot)).collect()
            }
            Activation::None => dy.to_vec(),
        }
    }
}

/// Fully connected layer on a single vector: `activation(x·W + b)`.
#[derive(Debug, Clone)]
pub struct Dense<F> {
    pub weight: Param<F>,
    pub bias: Param<F>,
    pub activation: Activation,
}

#[derive(Debug, Clone)]
pub struct DenseCache<F> {
    input: Vec<F>,
    output: Vec<F>,
}

impl<F: Scalar> Dense<F> {
    pub fn new<R: Rng>(name: &str, inputs: usize, outputs: usize, activation: Activation, rng: &mut R) -> Self {
        Dense {
            weight: Param::new(format!("{name}.kernel"), glorot_uniform(inputs, outputs, rng)),
            bias: Param::new(format!("{name}.bias"), Tensor2::zeros(1, outputs)),
            activation,
        }
    }

    pub fn from_parts(name: &str, weight: Tensor2<F>, bias: Vec<F>, activation: Activation) -> Self {
        Dense {
            weight: Param::new(format!("{name}.kernel"), weight),
            bias: Param::new(format!("{name}.bias"), Tensor2::row_vector(bias)),
            activation,
        }
    }

    pub fn inputs(&self) -> usize {
        self.weight.value.rows()
    }

    pub fn outputs(&self) -> usize {
        self.weight.value.cols()
    }

    pub fn forward(&self, x: &[F]) -> (Vec<F>, DenseCache<F>) {
        let mut z = self.bias.value.data().to_vec();
        vec_mat_acc(x, &self.weight.value, &mut z);
        self.activation.apply(&mut z);
        let cache = DenseCache {
            input: x.to_vec(),
            output: z.clone(),
        };
        (z, cache)
    }

    pub fn backward(&mut self, cache: &DenseCache<F>, dy: &[F]) -> Vec<F> {
        let dz = self.activation.backward(&cache.output, dy);
        super::tensor::outer_acc(&cache.input, &dz, &mut self.weight.grad);
        super::tensor::axpy(F::one(), &dz, self.bias.grad.data_mut());
        let w = &self.weight.value;
        (0..w.rows())
            .map(|i| w.row(i).iter().zip(&dz).map(|(&a, &b)| a * b).sum())
            .collect()
    }
}

impl<F: Scalar> HasParams<F> for Dense<F> {
    fn params(&self) -> Vec<&Param<F>> {
        vec![&self.weight, &self.bias]
    }

    fn params_mut(&mut self) -> Vec<&mut Param<F>> {
        vec![&mut self.weight, &mut self.bias]
    }
}
