//! Power-quality disturbance synthesis and classification.
//!
//! The crate is split along the pipeline:
//!
//! * [`signal`] synthesizes the six disturbance classes (sag, swell,
//!   interruption, harmonics, oscillatory transient, flicker).
//! * [`dataset`] assembles labelled collections, injects calibrated white
//!   Gaussian noise, builds stratified folds and persists everything in the
//!   `.pqds` container.
//! * [`nn`] is a small 1-D CNN (convolution, leaky ReLU, flatten, dense,
//!   softmax / cross-entropy) with hand-written backward passes.
//! * [`optim`] holds the Nadam optimizer and mini-batch shuffling.
//! * [`trainer`] runs stratified k-fold training with early stopping and
//!   produces a [`trainer::TrainReport`].

pub mod dataset;
pub mod error;
pub mod nn;
pub mod optim;
pub mod rng;
pub mod signal;
pub mod trainer;

pub use error::{Error, Result};

/// Number of disturbance classes handled throughout the crate.
pub const NUM_CLASSES: usize = 6;
