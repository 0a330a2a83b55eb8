//! Checks shared by the unit-level tests and the acceptance run. Each returns
//! a measured quantity so callers can apply their own threshold.

use std::f64::consts::PI;

use pqcore::dataset::add_awgn;
use pqcore::nn::{
    cross_entropy_loss, ConvLayer, DenseLayer, Layer, LeakyRelu, Network, Tensor1D,
};
use pqcore::rng::rng_for;
use pqcore::signal::{self, sample_params, EventClass, EventParams, SignalSpec, Waveform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{max_relative_error, naive_conv, numeric_gradient, reference_waveform, TestRng};

/// A conv layer with up to 4 channels each way and an input of at most 64
/// samples, with random weights.
pub fn random_conv(rng: &mut TestRng) -> (ConvLayer, Tensor1D) {
    let in_ch = 1 + rng.below(4);
    let out_ch = 1 + rng.below(4);
    let k = 1 + rng.below(16);
    let stride = 1 + rng.below(4);
    let len = k + rng.below(64 - k + 1);
    let mut layer = ConvLayer::new(out_ch, in_ch, k, stride).unwrap();
    layer.kernels = rng.vec(layer.kernels.len(), -1.0, 1.0);
    layer.bias = rng.vec(out_ch, -1.0, 1.0);
    let x = Tensor1D::new(in_ch, len, rng.vec(in_ch * len, -2.0, 2.0)).unwrap();
    (layer, x)
}

pub fn channels(x: &Tensor1D) -> Vec<Vec<f64>> {
    (0..x.channels()).map(|c| x.channel(c).to_vec()).collect()
}

pub fn conv_matches_naive(layer: &ConvLayer, x: &Tensor1D) -> bool {
    let fast = layer.forward(x).unwrap();
    let slow = naive_conv(
        &channels(x),
        &layer.kernels,
        &layer.bias,
        layer.out_channels,
        layer.kernel_len,
        layer.stride,
    );
    channels(&fast) == slow
}

/// Number of random instances whose output differs from the naive sum in
/// any bit.
pub fn conv_oracle_mismatches(instances: usize, seed: u64) -> usize {
    let mut rng = TestRng::new(seed);
    (0..instances)
        .filter(|_| {
            let (layer, x) = random_conv(&mut rng);
            !conv_matches_naive(&layer, &x)
        })
        .count()
}

/// `sum(w * out)` so the upstream gradient is simply `w`.
fn weighted(out: &[f64], w: &[f64]) -> f64 {
    out.iter().zip(w).map(|(a, b)| a * b).sum()
}

/// Worst relative error of the conv input, kernel and bias gradients.
pub fn conv_gradcheck(seed: u64, instances: usize) -> f64 {
    let mut rng = TestRng::new(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..instances {
        let (layer, x) = random_conv(&mut rng);
        let out_len = layer.output_len(x.length()).unwrap();
        let w = rng.vec(layer.out_channels * out_len, -1.0, 1.0);
        let g = Tensor1D::new(layer.out_channels, out_len, w.clone()).unwrap();
        let (gx, gk, gb) = layer.backward(&x, &g).unwrap();

        let fd_x = numeric_gradient(x.data(), |d| {
            let xi = Tensor1D::new(x.channels(), x.length(), d.to_vec()).unwrap();
            weighted(layer.forward(&xi).unwrap().data(), &w)
        });
        let fd_k = numeric_gradient(&layer.kernels, |k| {
            let mut l = layer.clone();
            l.kernels = k.to_vec();
            weighted(l.forward(&x).unwrap().data(), &w)
        });
        let fd_b = numeric_gradient(&layer.bias, |b| {
            let mut l = layer.clone();
            l.bias = b.to_vec();
            weighted(l.forward(&x).unwrap().data(), &w)
        });
        worst = worst
            .max(max_relative_error(gx.data(), &fd_x))
            .max(max_relative_error(&gk, &fd_k))
            .max(max_relative_error(&gb, &fd_b));
    }
    worst
}

/// Leaky ReLU input gradient, with every input kept away from the kink.
pub fn leaky_relu_gradcheck(seed: u64) -> f64 {
    let mut rng = TestRng::new(seed);
    let r = LeakyRelu::default();
    let data: Vec<f64> = (0..64)
        .map(|_| {
            let v = rng.uniform(0.01, 2.0);
            if rng.below(2) == 0 {
                v
            } else {
                -v
            }
        })
        .collect();
    let x = Tensor1D::new(2, 32, data).unwrap();
    let w = rng.vec(64, -1.0, 1.0);
    let g = Tensor1D::new(2, 32, w.clone()).unwrap();
    let analytic = r.backward(&x, &g);
    let fd = numeric_gradient(x.data(), |d| {
        weighted(r.forward(&Tensor1D::new(2, 32, d.to_vec()).unwrap()).data(), &w)
    });
    max_relative_error(analytic.data(), &fd)
}

pub fn dense_gradcheck(seed: u64) -> f64 {
    let mut rng = TestRng::new(seed);
    let mut layer = DenseLayer::new(17, 5).unwrap();
    layer.weights = rng.vec(85, -1.0, 1.0);
    layer.bias = rng.vec(5, -1.0, 1.0);
    let x = rng.vec(17, -2.0, 2.0);
    let w = rng.vec(5, -1.0, 1.0);
    let (gx, gw, gb) = layer.backward(&x, &w).unwrap();
    let fd_x = numeric_gradient(&x, |d| weighted(&layer.forward(d).unwrap(), &w));
    let fd_w = numeric_gradient(&layer.weights, |p| {
        let mut l = layer.clone();
        l.weights = p.to_vec();
        weighted(&l.forward(&x).unwrap(), &w)
    });
    let fd_b = numeric_gradient(&layer.bias, |p| {
        let mut l = layer.clone();
        l.bias = p.to_vec();
        weighted(&l.forward(&x).unwrap(), &w)
    });
    max_relative_error(&gx, &fd_x)
        .max(max_relative_error(&gw, &fd_w))
        .max(max_relative_error(&gb, &fd_b))
}

/// Softmax cross-entropy gradient with respect to the logits, every label.
pub fn cross_entropy_gradcheck(seed: u64) -> f64 {
    let mut rng = TestRng::new(seed);
    let mut worst: f64 = 0.0;
    for label in 0..6 {
        let z = rng.vec(6, -3.0, 3.0);
        let (_, grad) = cross_entropy_loss(&z, label).unwrap();
        let fd = numeric_gradient(&z, |zz| cross_entropy_loss(zz, label).unwrap().0);
        worst = worst.max(max_relative_error(&grad, &fd));
    }
    worst
}

/// input 32 -> conv(2 filters, kernel 8) -> leaky ReLU -> flatten -> dense(6)
pub fn tiny_network(seed: u64) -> Network {
    let mut net = Network::new(
        "tiny",
        32,
        vec![
            Layer::Conv(ConvLayer::new(2, 1, 8, 1).unwrap()),
            Layer::LeakyRelu(LeakyRelu::default()),
            Layer::Flatten,
            Layer::Dense(DenseLayer::new(50, 6).unwrap()),
        ],
    )
    .unwrap();
    net.init_glorot(&mut ChaCha8Rng::seed_from_u64(seed));
    net
}

/// Every parameter of the tiny network, through the full loss.
pub fn network_gradcheck(seed: u64) -> f64 {
    let net = tiny_network(seed);
    let mut rng = TestRng::new(seed ^ 0x5555);
    let x = Tensor1D::from_signal(&rng.vec(32, -1.0, 1.0));
    let label = rng.below(6);
    let (_, grads) = net.loss_and_gradients(&x, label).unwrap();
    let groups: Vec<Vec<f64>> = net.param_groups().iter().map(|g| g.to_vec()).collect();
    let mut worst: f64 = 0.0;
    for (gi, group) in groups.iter().enumerate() {
        let fd = numeric_gradient(group, |p| {
            let mut n = net.clone();
            n.param_groups_mut()[gi].copy_from_slice(p);
            cross_entropy_loss(&n.logits(&x).unwrap(), label).unwrap().0
        });
        worst = worst.max(max_relative_error(&grads.groups[gi], &fd));
    }
    worst
}

pub fn unit_sine(n: usize) -> Waveform {
    Waveform {
        samples: (0..n)
            .map(|i| (2.0 * PI * 60.0 * i as f64 / 5000.0).sin())
            .collect(),
        label: EventClass::Sag,
        params: EventParams::default(),
        spec: SignalSpec::default(),
    }
}

fn mean_square(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64
}

/// `(mean empirical SNR in dB, mean noise power)` over `trials` noisy
/// copies of a 1000-sample unit sine, measured against the clean samples.
pub fn empirical_snr(snr_db: f64, trials: u64) -> (f64, f64) {
    let clean = unit_sine(1000);
    let p_signal = mean_square(&clean.samples);
    let (mut snr_sum, mut noise_sum) = (0.0, 0.0);
    for trial in 0..trials {
        let noisy = add_awgn(&clean, snr_db, &mut ChaCha8Rng::seed_from_u64(trial)).unwrap();
        let noise: Vec<f64> = noisy.samples.iter().zip(&clean.samples).map(|(a, b)| a - b).collect();
        let p_noise = mean_square(&noise);
        snr_sum += 10.0 * (p_signal / p_noise).log10();
        noise_sum += p_noise;
    }
    (snr_sum / trials as f64, noise_sum / trials as f64)
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Worst per-sample deviation from the reference over `draws` random
/// parameter sets per class, and the worst harmonic energy error.
pub fn generator_fidelity(draws: u64, seed: u64) -> (f64, f64) {
    let spec = SignalSpec::default();
    let (mut worst, mut energy) = (0.0f64, 0.0f64);
    for class in EventClass::ALL {
        for draw in 0..draws {
            let p = sample_params(class, &mut rng_for(seed, class.code() as u64, draw), &spec);
            let w = signal::generate(class, &spec, &p).unwrap();
            worst = worst.max(max_abs_diff(&w.samples, &reference_waveform(class, &spec, &p)));
            if class == EventClass::Harmonics {
                let a1 = (1.0 - p.h3 * p.h3 - p.h5 * p.h5 - p.h7 * p.h7).sqrt();
                let e = a1 * a1 + p.h3 * p.h3 + p.h5 * p.h5 + p.h7 * p.h7;
                energy = energy.max((e - 1.0).abs()).max((p.h1() - a1).abs());
            }
        }
    }
    (worst, energy)
}
