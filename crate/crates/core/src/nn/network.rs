use rand::Rng;

use super::loss::{argmax, cross_entropy_loss, softmax};
use super::{ConvLayer, DenseLayer, LeakyRelu, Tensor1D};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Layer {
    Conv(ConvLayer),
    LeakyRelu(LeakyRelu),
    Flatten,
    Dense(DenseLayer),
}

impl Layer {
    fn output_shape(&self, (c, l): (usize, usize)) -> Result<(usize, usize)> {
        match self {
            Layer::Conv(conv) => {
                if c != conv.in_channels {
                    return Err(Error::ShapeMismatch(format!(
                        "conv expects {} channels, previous layer yields {c}",
                        conv.in_channels
                    )));
                }
                let len = conv.output_len(l).ok_or_else(|| {
                    Error::ShapeMismatch(format!(
                        "kernel length {} exceeds feature length {l}",
                        conv.kernel_len
                    ))
                })?;
                Ok((conv.out_channels, len))
            }
            Layer::LeakyRelu(_) => Ok((c, l)),
            Layer::Flatten => Ok((1, c * l)),
            Layer::Dense(d) => {
                if c != 1 || l != d.in_dim {
                    return Err(Error::ShapeMismatch(format!(
                        "dense expects 1x{}, previous layer yields {c}x{l}",
                        d.in_dim
                    )));
                }
                Ok((1, d.out_dim))
            }
        }
    }

    fn param_group_count(&self) -> usize {
        match self {
            Layer::Conv(_) | Layer::Dense(_) => 2,
            Layer::LeakyRelu(_) | Layer::Flatten => 0,
        }
    }

    fn forward(&self, x: &Tensor1D) -> Result<Tensor1D> {
        match self {
            Layer::Conv(conv) => conv.forward(x),
            Layer::LeakyRelu(r) => Ok(r.forward(x)),
            Layer::Flatten => Ok(x.clone().flattened()),
            Layer::Dense(d) => {
                let out = d.forward(x.data())?;
                Tensor1D::new(1, d.out_dim, out)
            }
        }
    }
}

/// Per-parameter-group gradient buffers, aligned with
/// [`Network::param_groups`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub groups: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn add_assign(&mut self, other: &Gradients) {
        for (a, b) in self.groups.iter_mut().zip(&other.groups) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    pub fn scale(&mut self, factor: f64) {
        self.groups.iter_mut().flatten().for_each(|g| *g *= factor);
    }

    pub fn zero(&mut self) {
        self.groups.iter_mut().flatten().for_each(|g| *g = 0.0);
    }

    pub fn as_slices(&self) -> Vec<&[f64]> {
        self.groups.iter().map(Vec::as_slice).collect()
    }
}

/// Loss and prediction for one example seen during training.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExampleOutcome {
    pub loss: f64,
    pub predicted: usize,
}

/// An ordered layer stack taking a single-channel input of fixed length.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    architecture: String,
    input_len: usize,
    layers: Vec<Layer>,
    num_classes: usize,
}

impl Network {
    /// Checks that layer shapes chain from `1 x input_len` to a flat score
    /// vector.
    pub fn new(architecture: impl Into<String>, input_len: usize, layers: Vec<Layer>) -> Result<Self> {
        let mut shape = (1, input_len);
        for layer in &layers {
            shape = layer.output_shape(shape)?;
        }
        if shape.0 != 1 || !matches!(layers.last(), Some(Layer::Dense(_))) {
            return Err(Error::ShapeMismatch(
                "network must end in a dense layer producing class scores".into(),
            ));
        }
        Ok(Self {
            architecture: architecture.into(),
            input_len,
            layers,
            num_classes: shape.1,
        })
    }

    pub fn architecture(&self) -> &str {
        &self.architecture
    }

    pub fn input_len(&self) -> usize {
        self.input_len
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    /// Glorot-uniform weights, zero biases.
    pub fn init_glorot<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        for layer in &mut self.layers {
            let (weights, bias, fan_in, fan_out) = match layer {
                Layer::Conv(c) => (
                    &mut c.kernels,
                    &mut c.bias,
                    c.in_channels * c.kernel_len,
                    c.out_channels * c.kernel_len,
                ),
                Layer::Dense(d) => (&mut d.weights, &mut d.bias, d.in_dim, d.out_dim),
                _ => continue,
            };
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            weights.iter_mut().for_each(|w| *w = rng.gen_range(-limit..limit));
            bias.iter_mut().for_each(|b| *b = 0.0);
        }
    }

    /// Parameter groups in layer order: `[kernels, bias]` for each conv and
    /// `[weights, bias]` for each dense layer.
    pub fn param_groups(&self) -> Vec<&[f64]> {
        let mut out = Vec::new();
        for layer in &self.layers {
            match layer {
                Layer::Conv(c) => {
                    out.push(c.kernels.as_slice());
                    out.push(c.bias.as_slice());
                }
                Layer::Dense(d) => {
                    out.push(d.weights.as_slice());
                    out.push(d.bias.as_slice());
                }
                _ => {}
            }
        }
        out
    }

    pub fn param_groups_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::new();
        for layer in &mut self.layers {
            match layer {
                Layer::Conv(c) => {
                    out.push(c.kernels.as_mut_slice());
                    out.push(c.bias.as_mut_slice());
                }
                Layer::Dense(d) => {
                    out.push(d.weights.as_mut_slice());
                    out.push(d.bias.as_mut_slice());
                }
                _ => {}
            }
        }
        out
    }

    pub fn parameter_count(&self) -> usize {
        self.param_groups().iter().map(|g| g.len()).sum()
    }

    pub fn zero_gradients(&self) -> Gradients {
        Gradients {
            groups: self.param_groups().iter().map(|g| vec![0.0; g.len()]).collect(),
        }
    }

    fn check_input(&self, x: &Tensor1D) -> Result<()> {
        if x.shape() != (1, self.input_len) {
            return Err(Error::ShapeMismatch(format!(
                "network expects 1x{} input, got {}x{}",
                self.input_len,
                x.channels(),
                x.length()
            )));
        }
        Ok(())
    }

    /// Inputs to every layer followed by the final scores.
    fn forward_trace(&self, x: &Tensor1D) -> Result<Vec<Tensor1D>> {
        self.check_input(x)?;
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(x.clone());
        for layer in &self.layers {
            let next = layer.forward(acts.last().expect("non-empty"))?;
            acts.push(next);
        }
        Ok(acts)
    }

    /// Raw class scores.
    pub fn logits(&self, x: &Tensor1D) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let mut cur = x.clone();
        for layer in &self.layers {
            cur = layer.forward(&cur)?;
        }
        Ok(cur.into_data())
    }

    /// Class probabilities.
    pub fn forward(&self, x: &Tensor1D) -> Result<Vec<f64>> {
        Ok(softmax(&self.logits(x)?))
    }

    pub fn predict(&self, samples: &[f64]) -> Result<usize> {
        Ok(argmax(&self.logits(&Tensor1D::from_signal(samples))?))
    }

    /// Cross-entropy loss for `label` and the predicted class, without
    /// gradients.
    pub fn evaluate_example(&self, samples: &[f64], label: usize) -> Result<ExampleOutcome> {
        let z = self.logits(&Tensor1D::from_signal(samples))?;
        let (loss, _) = cross_entropy_loss(&z, label)?;
        Ok(ExampleOutcome {
            loss,
            predicted: argmax(&z),
        })
    }

    /// Runs forward and backward for one example and adds its parameter
    /// gradients into `grads`.
    pub fn backward(&self, x: &Tensor1D, label: usize, grads: &mut Gradients) -> Result<ExampleOutcome> {
        let expected = self.param_groups().len();
        if grads.groups.len() != expected {
            return Err(Error::ShapeMismatch(format!(
                "{} gradient groups for {expected} parameter groups",
                grads.groups.len()
            )));
        }
        let acts = self.forward_trace(x)?;
        let scores = acts.last().expect("non-empty").data();
        let (loss, grad_z) = cross_entropy_loss(scores, label)?;
        let predicted = argmax(scores);

        let mut group = expected;
        let mut upstream = Tensor1D::new(1, grad_z.len(), grad_z)?;
        for (i, layer) in self.layers.iter().enumerate().rev() {
            let input = &acts[i];
            // The first layer's input gradient is never consumed.
            let want_input_grad = i > 0;
            group -= layer.param_group_count();
            upstream = match layer {
                Layer::Conv(conv) => {
                    let (gk, gb) = split_pair(&mut grads.groups, group);
                    match conv.backward_accumulate(input, &upstream, gk, gb, want_input_grad)? {
                        Some(g) => g,
                        None => break,
                    }
                }
                Layer::Dense(d) => {
                    let (gw, gb) = split_pair(&mut grads.groups, group);
                    match d.backward_accumulate(input.data(), upstream.data(), gw, gb, want_input_grad)? {
                        Some(g) => Tensor1D::new(input.channels(), input.length(), g)?,
                        None => break,
                    }
                }
                Layer::LeakyRelu(r) => r.backward(input, &upstream),
                Layer::Flatten => upstream.reshaped(input.channels(), input.length())?,
            };
        }
        Ok(ExampleOutcome { loss, predicted })
    }

    /// Loss and a fresh gradient set for one example.
    pub fn loss_and_gradients(&self, x: &Tensor1D, label: usize) -> Result<(f64, Gradients)> {
        let mut grads = self.zero_gradients();
        let outcome = self.backward(x, label, &mut grads)?;
        Ok((outcome.loss, grads))
    }
}

fn split_pair(groups: &mut [Vec<f64>], at: usize) -> (&mut [f64], &mut [f64]) {
    let (a, b) = groups[at..at + 2].split_at_mut(1);
    (a[0].as_mut_slice(), b[0].as_mut_slice())
}
