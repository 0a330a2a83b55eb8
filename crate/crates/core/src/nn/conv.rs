use super::{axpy, dot, Tensor1D};
use crate::{Error, Result};

/// Valid (unpadded) strided 1-D convolution, cross-correlation convention:
///
/// `out[o][j] = bias[o] + sum_c sum_m kernels[o][c][m] * x[c][j * stride + m]`
#[derive(Debug, Clone, PartialEq)]
pub struct ConvLayer {
    pub out_channels: usize,
    pub in_channels: usize,
    pub kernel_len: usize,
    pub stride: usize,
    /// `out_channels x in_channels x kernel_len`, row-major.
    pub kernels: Vec<f64>,
    pub bias: Vec<f64>,
}

/// Splits `row` into `stride` phases so that `row[j * stride + m]` becomes
/// `phase[m % stride][j + m / stride]` and every inner loop is contiguous.
fn phases(row: &[f64], stride: usize) -> Vec<Vec<f64>> {
    (0..stride)
        .map(|r| row.iter().skip(r).step_by(stride).copied().collect())
        .collect()
}

impl ConvLayer {
    pub fn new(
        out_channels: usize,
        in_channels: usize,
        kernel_len: usize,
        stride: usize,
    ) -> Result<Self> {
        if out_channels == 0 || in_channels == 0 || kernel_len == 0 || stride == 0 {
            return Err(Error::ShapeMismatch(format!(
                "conv dimensions must be positive: out={out_channels} in={in_channels} \
                 kernel={kernel_len} stride={stride}"
            )));
        }
        Ok(Self {
            out_channels,
            in_channels,
            kernel_len,
            stride,
            kernels: vec![0.0; out_channels * in_channels * kernel_len],
            bias: vec![0.0; out_channels],
        })
    }

    /// `floor((in_len - kernel_len) / stride) + 1`, or `None` if the kernel
    /// does not fit.
    pub fn output_len(&self, in_len: usize) -> Option<usize> {
        (in_len >= self.kernel_len).then(|| (in_len - self.kernel_len) / self.stride + 1)
    }

    #[inline]
    fn kernel_index(&self, o: usize, c: usize, m: usize) -> usize {
        (o * self.in_channels + c) * self.kernel_len + m
    }

    fn check_input(&self, x: &Tensor1D) -> Result<usize> {
        if x.channels() != self.in_channels {
            return Err(Error::ShapeMismatch(format!(
                "conv expects {} input channels, got {}",
                self.in_channels,
                x.channels()
            )));
        }
        self.output_len(x.length()).ok_or_else(|| {
            Error::ShapeMismatch(format!(
                "kernel length {} exceeds input length {}",
                self.kernel_len,
                x.length()
            ))
        })
    }

    pub fn forward(&self, x: &Tensor1D) -> Result<Tensor1D> {
        let len = self.check_input(x)?;
        let (s, k) = (self.stride, self.kernel_len);
        let inputs: Vec<Vec<Vec<f64>>> =
            (0..self.in_channels).map(|c| phases(x.channel(c), s)).collect();
        let mut out = Tensor1D::zeros(self.out_channels, len);
        for o in 0..self.out_channels {
            let row = out.channel_mut(o);
            row.fill(self.bias[o]);
            // Accumulates in (c, m) order per output, same as the direct sum.
            for (c, ph) in inputs.iter().enumerate() {
                for m in 0..k {
                    let w = self.kernels[self.kernel_index(o, c, m)];
                    let off = m / s;
                    axpy(w, &ph[m % s][off..off + len], row);
                }
            }
        }
        Ok(out)
    }

    /// Adds parameter gradients into `grad_kernels` / `grad_bias` and, when
    /// `want_input_grad` is set, returns the gradient with respect to `x`.
    pub fn backward_accumulate(
        &self,
        x: &Tensor1D,
        grad_out: &Tensor1D,
        grad_kernels: &mut [f64],
        grad_bias: &mut [f64],
        want_input_grad: bool,
    ) -> Result<Option<Tensor1D>> {
        let len = self.check_input(x)?;
        if grad_out.shape() != (self.out_channels, len) {
            return Err(Error::ShapeMismatch(format!(
                "conv grad_out is {:?}, forward output is {:?}",
                grad_out.shape(),
                (self.out_channels, len)
            )));
        }
        if grad_kernels.len() != self.kernels.len() || grad_bias.len() != self.bias.len() {
            return Err(Error::ShapeMismatch("conv gradient buffers".into()));
        }
        let (s, k) = (self.stride, self.kernel_len);
        let inputs: Vec<Vec<Vec<f64>>> =
            (0..self.in_channels).map(|c| phases(x.channel(c), s)).collect();
        let mut input_grads: Option<Vec<Vec<Vec<f64>>>> = want_input_grad.then(|| {
            inputs
                .iter()
                .map(|ph| ph.iter().map(|p| vec![0.0; p.len()]).collect())
                .collect()
        });
        for o in 0..self.out_channels {
            let g = grad_out.channel(o);
            grad_bias[o] += g.iter().sum::<f64>();
            for (c, ph) in inputs.iter().enumerate() {
                for m in 0..k {
                    let idx = self.kernel_index(o, c, m);
                    let off = m / s;
                    grad_kernels[idx] += dot(g, &ph[m % s][off..off + len]);
                    if let Some(gx) = input_grads.as_mut() {
                        axpy(self.kernels[idx], g, &mut gx[c][m % s][off..off + len]);
                    }
                }
            }
        }
        Ok(input_grads.map(|gx| {
            let mut grad_x = Tensor1D::zeros(self.in_channels, x.length());
            for (c, ph) in gx.iter().enumerate() {
                let row = grad_x.channel_mut(c);
                for (r, p) in ph.iter().enumerate() {
                    for (q, v) in p.iter().enumerate() {
                        row[q * s + r] = *v;
                    }
                }
            }
            grad_x
        }))
    }

    /// Returns `(grad_x, grad_kernels, grad_bias)`.
    pub fn backward(
        &self,
        x: &Tensor1D,
        grad_out: &Tensor1D,
    ) -> Result<(Tensor1D, Vec<f64>, Vec<f64>)> {
        let mut gk = vec![0.0; self.kernels.len()];
        let mut gb = vec![0.0; self.bias.len()];
        let gx = self.backward_accumulate(x, grad_out, &mut gk, &mut gb, true)?;
        Ok((gx.expect("input gradient requested"), gk, gb))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(kernel: &[f64], bias: f64, stride: usize) -> ConvLayer {
        let mut l = ConvLayer::new(1, 1, kernel.len(), stride).unwrap();
        l.kernels.copy_from_slice(kernel);
        l.bias[0] = bias;
        l
    }

    #[test]
    fn difference_kernel() {
        let x = Tensor1D::from_signal(&[1.0, 2.0, 3.0, 4.0]);
        let y = single(&[1.0, 0.0, -1.0], 0.0, 1).forward(&x).unwrap();
        assert_eq!(y.data(), &[-2.0, -2.0]);
    }

    #[test]
    fn identity_and_constant_kernels() {
        let x = Tensor1D::from_signal(&[0.5, -1.0, 3.0, 7.5, 2.0]);
        assert_eq!(single(&[1.0], 0.0, 1).forward(&x).unwrap(), x);
        let y = single(&[0.0, 0.0], 2.5, 1).forward(&x).unwrap();
        assert!(y.data().iter().all(|&v| v == 2.5));
        assert_eq!(y.length(), 4);
    }

    #[test]
    fn stride_output_length() {
        let l = ConvLayer::new(8, 1, 200, 4).unwrap();
        assert_eq!(l.output_len(1000), Some(201));
        assert_eq!(l.output_len(199), None);
        let x = Tensor1D::from_signal(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0]);
        let y = single(&[1.0, 1.0], 0.0, 3).forward(&x).unwrap();
        assert_eq!(y.data(), &[3.0, 9.0]);
    }

    #[test]
    fn zero_upstream_gives_zero_gradients() {
        let mut l = ConvLayer::new(2, 2, 3, 2).unwrap();
        l.kernels.iter_mut().enumerate().for_each(|(i, w)| *w = i as f64 * 0.1);
        let x = Tensor1D::new(2, 9, (0..18).map(|i| i as f64).collect()).unwrap();
        let (gx, gk, gb) = l.backward(&x, &Tensor1D::zeros(2, 4)).unwrap();
        assert!(gx.data().iter().chain(&gk).chain(&gb).all(|&v| v == 0.0));
    }

    #[test]
    fn one_term_kernel_gradient_is_scaled_input() {
        let l = single(&[0.3, -0.2, 0.9], 0.0, 1);
        let x = Tensor1D::from_signal(&[1.5, -2.0, 4.0]);
        let g = Tensor1D::from_signal(&[2.0]);
        let (gx, gk, gb) = l.backward(&x, &g).unwrap();
        assert_eq!(gk, vec![3.0, -4.0, 8.0]);
        assert_eq!(gb, vec![2.0]);
        assert_eq!(gx.data(), &[0.6, -0.4, 1.8]);
    }

    #[test]
    fn shape_errors() {
        let l = ConvLayer::new(1, 2, 3, 1).unwrap();
        assert!(l.forward(&Tensor1D::from_signal(&[1.0; 5])).is_err());
        let l = ConvLayer::new(1, 1, 6, 1).unwrap();
        assert!(l.forward(&Tensor1D::from_signal(&[1.0; 5])).is_err());
        let l = ConvLayer::new(1, 1, 2, 1).unwrap();
        let x = Tensor1D::from_signal(&[1.0; 5]);
        assert!(l.backward(&x, &Tensor1D::zeros(1, 3)).is_err());
        assert!(ConvLayer::new(1, 1, 0, 1).is_err());
    }
}
