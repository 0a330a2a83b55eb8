use super::{axpy, dot};
use crate::{Error, Result};

/// Fully connected layer `out = W x + b` with `W` stored `out_dim x in_dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub in_dim: usize,
    pub out_dim: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl DenseLayer {
    pub fn new(in_dim: usize, out_dim: usize) -> Result<Self> {
        if in_dim == 0 || out_dim == 0 {
            return Err(Error::ShapeMismatch(format!(
                "dense dimensions must be positive: {in_dim} -> {out_dim}"
            )));
        }
        Ok(Self {
            in_dim,
            out_dim,
            weights: vec![0.0; in_dim * out_dim],
            bias: vec![0.0; out_dim],
        })
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.in_dim {
            return Err(Error::ShapeMismatch(format!(
                "dense expects {} inputs, got {}",
                self.in_dim,
                x.len()
            )));
        }
        Ok(())
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check(x)?;
        Ok(self
            .weights
            .chunks_exact(self.in_dim)
            .zip(&self.bias)
            .map(|(row, b)| b + dot(row, x))
            .collect())
    }

    /// Adds parameter gradients into the buffers and optionally returns the
    /// input gradient `W^T grad_out`.
    pub fn backward_accumulate(
        &self,
        x: &[f64],
        grad_out: &[f64],
        grad_weights: &mut [f64],
        grad_bias: &mut [f64],
        want_input_grad: bool,
    ) -> Result<Option<Vec<f64>>> {
        self.check(x)?;
        if grad_out.len() != self.out_dim {
            return Err(Error::ShapeMismatch(format!(
                "dense grad_out has {} entries, expected {}",
                grad_out.len(),
                self.out_dim
            )));
        }
        if grad_weights.len() != self.weights.len() || grad_bias.len() != self.bias.len() {
            return Err(Error::ShapeMismatch("dense gradient buffers".into()));
        }
        let mut grad_x = want_input_grad.then(|| vec![0.0; self.in_dim]);
        for (o, &g) in grad_out.iter().enumerate() {
            grad_bias[o] += g;
            let span = o * self.in_dim..(o + 1) * self.in_dim;
            axpy(g, x, &mut grad_weights[span.clone()]);
            if let Some(gx) = grad_x.as_mut() {
                axpy(g, &self.weights[span], gx);
            }
        }
        Ok(grad_x)
    }

    /// Returns `(grad_x, grad_weights, grad_bias)`.
    pub fn backward(&self, x: &[f64], grad_out: &[f64]) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
        let mut gw = vec![0.0; self.weights.len()];
        let mut gb = vec![0.0; self.bias.len()];
        let gx = self.backward_accumulate(x, grad_out, &mut gw, &mut gb, true)?;
        Ok((gx.expect("input gradient requested"), gw, gb))
    }
}
