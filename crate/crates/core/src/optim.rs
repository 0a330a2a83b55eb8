//! Nadam updates and mini-batch scheduling.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::dataset::Reader;
use crate::{Error, Result};

/// Nadam hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NadamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for NadamConfig {
    fn default() -> Self {
        Self {
            lr: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl NadamConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.lr > 0.0
            && self.beta1 > 0.0
            && self.beta1 < 1.0
            && self.beta2 > 0.0
            && self.beta2 < 1.0
            && self.eps > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("invalid Nadam settings {self:?}")))
        }
    }
}

/// Moment estimates and step counter, one buffer per parameter group.
#[derive(Debug, Clone, PartialEq)]
pub struct NadamState {
    pub config: NadamConfig,
    pub m: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
    pub t: u64,
}

impl NadamState {
    /// Fresh state shaped like `groups`.
    pub fn new(config: NadamConfig, groups: &[&[f64]]) -> Self {
        Self {
            config,
            m: groups.iter().map(|g| vec![0.0; g.len()]).collect(),
            v: groups.iter().map(|g| vec![0.0; g.len()]).collect(),
            t: 0,
        }
    }

    /// One Nadam update of `params` with gradients `grads`.
    ///
    /// With `t` the 1-based step, per scalar:
    ///
    /// ```text
    /// m = b1 m + (1 - b1) g          v = b2 v + (1 - b2) g^2
    /// m_hat = m / (1 - b1^t)         v_hat = v / (1 - b2^t)
    /// theta -= lr (b1 m_hat + (1 - b1) g / (1 - b1^t)) / (sqrt(v_hat) + eps)
    /// ```
    ///
    /// Non-finite gradients abort the step before anything is modified.
    pub fn step(&mut self, params: &mut [&mut [f64]], grads: &[&[f64]]) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(Error::ShapeMismatch(format!(
                "optimizer holds {} groups, got {} params / {} grads",
                self.m.len(),
                params.len(),
                grads.len()
            )));
        }
        for (i, ((p, g), m)) in params.iter().zip(grads).zip(&self.m).enumerate() {
            if p.len() != m.len() || g.len() != m.len() {
                return Err(Error::ShapeMismatch(format!("parameter group {i} size changed")));
            }
        }
        if let Some(group) = grads.iter().position(|g| g.iter().any(|x| !x.is_finite())) {
            return Err(Error::NonFiniteGradient { group });
        }

        self.t += 1;
        let NadamConfig {
            lr,
            beta1,
            beta2,
            eps,
        } = self.config;
        let t = self.t as i32;
        let bias1 = 1.0 - beta1.powi(t);
        let bias2 = 1.0 - beta2.powi(t);
        for (((p, g), m), v) in params.iter_mut().zip(grads).zip(&mut self.m).zip(&mut self.v) {
            for j in 0..p.len() {
                let gj = g[j];
                m[j] = beta1 * m[j] + (1.0 - beta1) * gj;
                v[j] = beta2 * v[j] + (1.0 - beta2) * gj * gj;
                let m_hat = m[j] / bias1;
                let v_hat = v[j] / bias2;
                let nesterov = beta1 * m_hat + (1.0 - beta1) * gj / bias1;
                p[j] -= lr * nesterov / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }

    /// Little-endian snapshot: config (4 x f64), t (u64), group count (u32),
    /// then per group its length (u64), `m` and `v`.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        for x in [self.config.lr, self.config.beta1, self.config.beta2, self.config.eps] {
            buf.extend_from_slice(&x.to_le_bytes());
        }
        buf.extend_from_slice(&self.t.to_le_bytes());
        buf.extend_from_slice(&(self.m.len() as u32).to_le_bytes());
        for (m, v) in self.m.iter().zip(&self.v) {
            buf.extend_from_slice(&(m.len() as u64).to_le_bytes());
            for x in m.iter().chain(v) {
                buf.extend_from_slice(&x.to_le_bytes());
            }
        }
        buf
    }

    pub fn from_bytes(buf: &[u8]) -> Result<Self> {
        let mut r = Reader::new(buf);
        let config = NadamConfig {
            lr: r.f64("lr")?,
            beta1: r.f64("beta1")?,
            beta2: r.f64("beta2")?,
            eps: r.f64("eps")?,
        };
        let t = r.u64("step")?;
        let groups = r.u32("group count")?;
        let (mut m, mut v) = (Vec::new(), Vec::new());
        for _ in 0..groups {
            let len = r.u64("group length")? as usize;
            m.push(r.f64s(len, "first moment")?);
            v.push(r.f64s(len, "second moment")?);
        }
        r.finish()?;
        Ok(Self { config, m, v, t })
    }
}

/// Shuffles `indices` and cuts them into consecutive batches of
/// `batch_size`; the last batch may be shorter.
pub fn make_batches<R: Rng + ?Sized>(
    indices: &[usize],
    batch_size: usize,
    rng: &mut R,
) -> Result<Vec<Vec<usize>>> {
    if batch_size == 0 {
        return Err(Error::InvalidConfig("batch size must be at least 1".into()));
    }
    let mut order = indices.to_vec();
    order.shuffle(rng);
    Ok(order.chunks(batch_size).map(<[usize]>::to_vec).collect())
}
