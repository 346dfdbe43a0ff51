use super::param::{HasParams, Param};
use super::tensor::{axpy, Scalar, Tensor2};

/// Lookup table `V × D`. Row 0 is the padding row: it stays zero and is
/// never updated.
#[derive(Debug, Clone)]
pub struct EmbeddingLayer<F> {
    pub table: Param<F>,
}

impl<F: Scalar> EmbeddingLayer<F> {
    pub fn new(mut table: Tensor2<F>, trainable: bool) -> Self {
        if table.rows() > 0 {
            table.row_mut(0).fill(F::zero());
        }
        let mut p = Param::new("embedding", table);
        p.trainable = trainable;
        p.frozen_rows = 1;
        EmbeddingLayer { table: p }
    }

    pub fn vocab_size(&self) -> usize {
        self.table.value.rows()
    }

    pub fn dim(&self) -> usize {
        self.table.value.cols()
    }

    /// `p × D` matrix of the rows for `ids`.
    pub fn forward(&self, ids: &[usize]) -> Tensor2<F> {
        let d = self.dim();
        let mut out = Tensor2::zeros(ids.len(), d);
        for (t, &id) in ids.iter().enumerate() {
            out.row_mut(t).copy_from_slice(self.table.value.row(id));
        }
        out
    }

    pub fn backward(&mut self, ids: &[usize], dy: &Tensor2<F>) {
        if !self.table.trainable {
            return;
        }
        for (t, &id) in ids.iter().enumerate() {
            if id >= self.table.frozen_rows {
                axpy(F::one(), dy.row(t), self.table.grad.row_mut(id));
            }
        }
    }
}

impl<F: Scalar> HasParams<F> for EmbeddingLayer<F> {
    fn params(&self) -> Vec<&Param<F>> {
        vec![&self.table]
    }

    fn params_mut(&mut self) -> Vec<&mut Param<F>> {
        vec![&mut self.table]
    }
}
