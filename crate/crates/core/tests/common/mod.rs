//! Independent oracles shared by the integration tests. Nothing in this
//! file calls into the code paths it is used to check; `checks` pairs the
//! oracles with the library.

#![allow(dead_code)]

use std::f64::consts::PI;

pub mod checks;

use pqcore::signal::{EventClass, EventParams, SignalSpec};

/// Direct per-sample evaluation of each class model.
pub fn reference_waveform(class: EventClass, spec: &SignalSpec, p: &EventParams) -> Vec<f64> {
    let n = (spec.duration_s * spec.sample_rate_hz).round() as usize;
    let w = 2.0 * PI * spec.fundamental_hz;
    let v = spec.amplitude_pu;
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let t = i as f64 / spec.sample_rate_hz;
        let inside = t >= p.t1_s && t < p.t2_s;
        let s = match class {
            EventClass::Sag | EventClass::Interruption => {
                let depth = if inside { p.alpha } else { 0.0 };
                v * (1.0 - depth) * (w * t).sin()
            }
            EventClass::Swell => {
                let rise = if inside { p.alpha } else { 0.0 };
                v * (1.0 + rise) * (w * t).sin()
            }
            EventClass::Harmonics => {
                let a1 = (1.0 - p.h3.powi(2) - p.h5.powi(2) - p.h7.powi(2)).sqrt();
                let mut acc = 0.0;
                for (k, a) in [(1.0, a1), (3.0, p.h3), (5.0, p.h5), (7.0, p.h7)] {
                    acc += a * (k * w * t).sin();
                }
                v * acc
            }
            EventClass::Transient => {
                let mut s = (w * t).sin();
                if t >= p.t1_s {
                    s += p.alpha * (-(t - p.t1_s) / p.tau_s).exp() * (2.0 * PI * p.omega_n_hz * t).sin();
                }
                v * s
            }
            EventClass::Flicker => v * (1.0 + p.alpha * (2.0 * PI * p.beta_hz * t).sin()) * (w * t).sin(),
        };
        out.push(s);
    }
    out
}

/// Naive strided cross-correlation:
/// `out[o][j] = bias[o] + sum_c sum_m k[o][c][m] x[c][j*stride + m]`.
pub fn naive_conv(
    x: &[Vec<f64>],
    kernels: &[f64],
    bias: &[f64],
    out_ch: usize,
    k_len: usize,
    stride: usize,
) -> Vec<Vec<f64>> {
    let in_ch = x.len();
    let len = (x[0].len() - k_len) / stride + 1;
    let mut out = vec![vec![0.0; len]; out_ch];
    for o in 0..out_ch {
        for j in 0..len {
            let mut acc = bias[o];
            for c in 0..in_ch {
                for m in 0..k_len {
                    acc += kernels[(o * in_ch + c) * k_len + m] * x[c][j * stride + m];
                }
            }
            out[o][j] = acc;
        }
    }
    out
}

pub const FD_STEP: f64 = 1e-5;

/// Central finite difference of `f` with respect to every entry of `at`.
pub fn numeric_gradient(at: &[f64], mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut x = at.to_vec();
    (0..x.len())
        .map(|i| {
            let orig = x[i];
            x[i] = orig + FD_STEP;
            let plus = f(&x);
            x[i] = orig - FD_STEP;
            let minus = f(&x);
            x[i] = orig;
            (plus - minus) / (2.0 * FD_STEP)
        })
        .collect()
}

/// `|a - b| / max(|a|, |b|, floor)`; the floor keeps near-zero gradients
/// from turning finite-difference round-off into large relative errors.
pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-4)
}

pub fn max_relative_error(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| relative_error(*x, *y)).fold(0.0, f64::max)
}

/// Small deterministic generator for test inputs (xorshift64*).
pub struct TestRng(u64);

impl TestRng {
    pub fn new(seed: u64) -> Self {
        Self(seed.wrapping_mul(0x9e37_79b9_7f4a_7c15) | 1)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 ^= self.0 >> 12;
        self.0 ^= self.0 << 25;
        self.0 ^= self.0 >> 27;
        self.0.wrapping_mul(0x2545_f491_4f6c_dd1d)
    }

    /// Uniform in `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * ((self.next_u64() >> 11) as f64 / (1u64 << 53) as f64)
    }

    pub fn below(&mut self, n: usize) -> usize {
        (self.next_u64() % n as u64) as usize
    }

    pub fn vec(&mut self, n: usize, lo: f64, hi: f64) -> Vec<f64> {
        (0..n).map(|_| self.uniform(lo, hi)).collect()
    }
}
