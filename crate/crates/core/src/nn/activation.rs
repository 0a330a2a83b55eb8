use super::Tensor1D;

/// Leaky rectifier `max(alpha * x, x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeakyRelu {
    pub alpha: f64,
}

impl Default for LeakyRelu {
    fn default() -> Self {
        Self { alpha: 0.001 }
    }
}

impl LeakyRelu {
    pub fn new(alpha: f64) -> Self {
        Self { alpha }
    }

    #[inline]
    pub fn apply(&self, x: f64) -> f64 {
        if x >= 0.0 {
            x
        } else {
            self.alpha * x
        }
    }

    /// Derivative, taking 1 at `x = 0`.
    #[inline]
    pub fn slope(&self, x: f64) -> f64 {
        if x >= 0.0 {
            1.0
        } else {
            self.alpha
        }
    }

    pub fn forward(&self, x: &Tensor1D) -> Tensor1D {
        let mut out = x.clone();
        out.data_mut().iter_mut().for_each(|v| *v = self.apply(*v));
        out
    }

    /// `grad_out` scaled elementwise by the slope at the forward input `x`.
    pub fn backward(&self, x: &Tensor1D, grad_out: &Tensor1D) -> Tensor1D {
        let mut g = grad_out.clone();
        for (gi, &xi) in g.data_mut().iter_mut().zip(x.data()) {
            *gi *= self.slope(xi);
        }
        g
    }
}
