//! A small 1-D convolutional network with hand-written gradients.
//!
//! Layers operate on [`Tensor1D`] values (channels x length, row-major).
//! The classifier head is a dense layer producing raw scores; softmax and
//! cross-entropy are fused in [`loss::cross_entropy_loss`].

pub mod activation;
pub mod arch;
pub mod conv;
pub mod dense;
pub mod io;
pub mod loss;
pub mod network;
pub mod tensor;

pub use activation::LeakyRelu;
pub use arch::Architecture;
pub use conv::ConvLayer;
pub use dense::DenseLayer;
pub use loss::{cross_entropy_loss, softmax};
pub use network::{Gradients, Layer, Network};
pub use tensor::Tensor1D;

/// Dot product with four independent accumulators.
#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let mut tail = 0.0;
    for (x, y) in ra.iter().zip(rb) {
        tail += x * y;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// `y += a * x`
#[inline]
pub(crate) fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}
