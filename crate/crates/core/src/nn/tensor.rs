use crate::{Error, Result};

/// Channels x length grid of reals, stored row-major (one row per channel).
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor1D {
    channels: usize,
    length: usize,
    data: Vec<f64>,
}

impl Tensor1D {
    pub fn new(channels: usize, length: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != channels * length {
            return Err(Error::ShapeMismatch(format!(
                "{} values for a {channels}x{length} tensor",
                data.len()
            )));
        }
        Ok(Self {
            channels,
            length,
            data,
        })
    }

    pub fn zeros(channels: usize, length: usize) -> Self {
        Self {
            channels,
            length,
            data: vec![0.0; channels * length],
        }
    }

    /// Single-channel tensor holding a copy of `samples`.
    pub fn from_signal(samples: &[f64]) -> Self {
        Self {
            channels: 1,
            length: samples.len(),
            data: samples.to_vec(),
        }
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.channels, self.length)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn channel(&self, c: usize) -> &[f64] {
        &self.data[c * self.length..(c + 1) * self.length]
    }

    pub fn channel_mut(&mut self, c: usize) -> &mut [f64] {
        &mut self.data[c * self.length..(c + 1) * self.length]
    }

    pub fn get(&self, c: usize, j: usize) -> f64 {
        self.data[c * self.length + j]
    }

    /// Same data viewed as `1 x (channels * length)`.
    pub fn flattened(self) -> Self {
        Self {
            channels: 1,
            length: self.data.len(),
            data: self.data,
        }
    }

    pub fn reshaped(self, channels: usize, length: usize) -> Result<Self> {
        Self::new(channels, length, self.data)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }
}
