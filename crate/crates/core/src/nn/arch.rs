//! The four convolutional stacks compared in the experiments.
//!
//! Each listed kernel length becomes one convolution with
//! [`FILTERS_PER_LAYER`] filters followed by a leaky ReLU; the head is
//! flatten + dense(6). The first convolution uses stride
//! [`FIRST_LAYER_STRIDE`], deeper ones stride 1 so the 100- and 50-tap
//! kernels still fit the shrunken feature maps.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{ConvLayer, DenseLayer, Layer, LeakyRelu, Network};
use crate::{Error, Result, NUM_CLASSES};

pub const FILTERS_PER_LAYER: usize = 8;
pub const FIRST_LAYER_STRIDE: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Architecture {
    Cnn1a,
    Cnn1b,
    Cnn1c,
    Cnn1d,
}

impl Architecture {
    pub const ALL: [Architecture; 4] = [
        Architecture::Cnn1a,
        Architecture::Cnn1b,
        Architecture::Cnn1c,
        Architecture::Cnn1d,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Architecture::Cnn1a => "cnn-1a",
            Architecture::Cnn1b => "cnn-1b",
            Architecture::Cnn1c => "cnn-1c",
            Architecture::Cnn1d => "cnn-1d",
        }
    }

    pub fn kernel_lens(self) -> &'static [usize] {
        match self {
            Architecture::Cnn1a => &[200, 100, 50],
            Architecture::Cnn1b => &[200, 100],
            Architecture::Cnn1c => &[200],
            Architecture::Cnn1d => &[400],
        }
    }

    /// Human-readable structure, e.g. `2 layers, 200x1, 100x1`.
    pub fn structure(self) -> String {
        let k = self.kernel_lens();
        let mut s = format!("{} layer{}", k.len(), if k.len() == 1 { "" } else { "s" });
        for len in k {
            s.push_str(&format!(", {len}x1"));
        }
        s
    }

    pub fn layers(self, input_len: usize) -> Result<Vec<Layer>> {
        let mut layers = Vec::new();
        let (mut channels, mut len) = (1, input_len);
        for (i, &k) in self.kernel_lens().iter().enumerate() {
            let stride = if i == 0 { FIRST_LAYER_STRIDE } else { 1 };
            let conv = ConvLayer::new(FILTERS_PER_LAYER, channels, k, stride)?;
            len = conv.output_len(len).ok_or_else(|| {
                Error::ShapeMismatch(format!(
                    "{}: kernel {k} does not fit feature length {len}",
                    self.name()
                ))
            })?;
            channels = FILTERS_PER_LAYER;
            layers.push(Layer::Conv(conv));
            layers.push(Layer::LeakyRelu(LeakyRelu::default()));
        }
        layers.push(Layer::Flatten);
        layers.push(Layer::Dense(DenseLayer::new(channels * len, NUM_CLASSES)?));
        Ok(layers)
    }

    /// Builds the network with Glorot-initialized weights drawn from `seed`.
    pub fn build(self, input_len: usize, seed: u64) -> Result<Network> {
        let mut net = Network::new(self.name(), input_len, self.layers(input_len)?)?;
        net.init_glorot(&mut ChaCha8Rng::seed_from_u64(seed));
        Ok(net)
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Architecture {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        Architecture::ALL
            .into_iter()
            .find(|a| a.name() == lower)
            .ok_or_else(|| Error::InvalidArchitecture(s.to_string()))
    }
}
