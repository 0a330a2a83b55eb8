//! Closed-form synthesis of the six power-quality disturbance classes.
//!
//! All waveforms are per-unit voltages sampled at `t_i = i / sample_rate_hz`.
//! Sag, swell and interruption scale the fundamental by a rectangular window
//! `u(t - t1) - u(t - t2)`; harmonics add odd orders 3, 5 and 7 with the
//! fundamental weight fixed by unit total energy; the oscillatory transient
//! adds an exponentially decaying tone from `t1` onwards; flicker modulates
//! the amplitude at a low frequency.

use std::f64::consts::{PI, TAU};
use std::fmt;

use rand::Rng;

use crate::{Error, Result};

/// Sampling grid and nominal amplitude shared by every waveform of a dataset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignalSpec {
    pub sample_rate_hz: f64,
    pub fundamental_hz: f64,
    pub duration_s: f64,
    pub amplitude_pu: f64,
}

impl Default for SignalSpec {
    fn default() -> Self {
        Self {
            sample_rate_hz: 5000.0,
            fundamental_hz: 60.0,
            duration_s: 0.2,
            amplitude_pu: 1.0,
        }
    }
}

impl SignalSpec {
    pub fn new(
        sample_rate_hz: f64,
        fundamental_hz: f64,
        duration_s: f64,
        amplitude_pu: f64,
    ) -> Result<Self> {
        let spec = Self {
            sample_rate_hz,
            fundamental_hz,
            duration_s,
            amplitude_pu,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("sample_rate_hz", self.sample_rate_hz),
            ("fundamental_hz", self.fundamental_hz),
            ("duration_s", self.duration_s),
            ("amplitude_pu", self.amplitude_pu),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::Constraint(format!("{name} must be positive, got {value}")));
            }
        }
        // The 7th harmonic must sit below Nyquist.
        if self.sample_rate_hz < 14.0 * self.fundamental_hz {
            return Err(Error::Constraint(format!(
                "sample rate {} Hz is below twice the 7th harmonic of {} Hz",
                self.sample_rate_hz, self.fundamental_hz
            )));
        }
        let n = self.duration_s * self.sample_rate_hz;
        if (n - n.round()).abs() > 1e-9 * n.max(1.0) || n.round() < 2.0 {
            return Err(Error::Constraint(format!(
                "duration x sample rate = {n} is not a whole number of samples >= 2"
            )));
        }
        Ok(())
    }

    pub fn sample_count(&self) -> usize {
        (self.duration_s * self.sample_rate_hz).round() as usize
    }

    /// Time of sample `i` in seconds.
    #[inline]
    pub fn time(&self, i: usize) -> f64 {
        i as f64 / self.sample_rate_hz
    }

    /// Angular frequency of the fundamental, rad/s.
    #[inline]
    pub fn omega(&self) -> f64 {
        TAU * self.fundamental_hz
    }

    pub fn half_cycle_s(&self) -> f64 {
        0.5 / self.fundamental_hz
    }
}

/// The six disturbance classes, with integer codes 1..=6.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(u8)]
pub enum EventClass {
    Sag = 1,
    Swell = 2,
    Interruption = 3,
    Harmonics = 4,
    Transient = 5,
    Flicker = 6,
}

impl EventClass {
    pub const ALL: [EventClass; 6] = [
        EventClass::Sag,
        EventClass::Swell,
        EventClass::Interruption,
        EventClass::Harmonics,
        EventClass::Transient,
        EventClass::Flicker,
    ];

    pub fn code(self) -> u8 {
        self as u8
    }

    /// Zero-based index, used as the network's target label.
    pub fn index(self) -> usize {
        self as usize - 1
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.get((code as usize).wrapping_sub(1)).copied()
    }

    pub fn from_index(index: usize) -> Option<Self> {
        Self::ALL.get(index).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            EventClass::Sag => "sag",
            EventClass::Swell => "swell",
            EventClass::Interruption => "interruption",
            EventClass::Harmonics => "harmonics",
            EventClass::Transient => "transient",
            EventClass::Flicker => "flicker",
        }
    }
}

impl fmt::Display for EventClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Generating parameters of one waveform. Fields not used by a class are
/// left at zero (or at the full-record window for `t1_s`/`t2_s`).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EventParams {
    /// Depth (sag, interruption), rise (swell), transient or flicker magnitude.
    pub alpha: f64,
    pub t1_s: f64,
    pub t2_s: f64,
    pub h3: f64,
    pub h5: f64,
    pub h7: f64,
    /// Oscillation frequency of the transient, Hz.
    pub omega_n_hz: f64,
    /// Decay constant of the transient, s.
    pub tau_s: f64,
    /// Flicker modulation frequency, Hz.
    pub beta_hz: f64,
}

impl EventParams {
    /// Fundamental weight `h1 = sqrt(1 - h3^2 - h5^2 - h7^2)`.
    pub fn h1(&self) -> f64 {
        (1.0 - self.h3 * self.h3 - self.h5 * self.h5 - self.h7 * self.h7).sqrt()
    }

    /// Checks the parameter ranges for `class` against `spec`.
    pub fn validate(&self, class: EventClass, spec: &SignalSpec) -> Result<()> {
        match class {
            EventClass::Sag | EventClass::Swell => {
                check_range("alpha", self.alpha, 0.1, 0.9)?;
                self.validate_window(spec)
            }
            EventClass::Interruption => {
                check_range("alpha", self.alpha, 0.9, 1.0)?;
                self.validate_window(spec)
            }
            EventClass::Harmonics => {
                check_range("h3", self.h3, 0.05, 0.15)?;
                check_range("h5", self.h5, 0.05, 0.15)?;
                check_range("h7", self.h7, 0.05, 0.15)
            }
            EventClass::Transient => {
                check_range("alpha", self.alpha, 0.1, 0.8)?;
                check_range("omega_n_hz", self.omega_n_hz, 100.0, 400.0)?;
                check_range("tau_s", self.tau_s, 0.008, 0.04)?;
                check_range("t1_s", self.t1_s, 0.0, spec.duration_s)
            }
            EventClass::Flicker => {
                check_range("alpha", self.alpha, 0.1, 0.2)?;
                check_range("beta_hz", self.beta_hz, 0.5, 25.0)
            }
        }
    }

    fn validate_window(&self, spec: &SignalSpec) -> Result<()> {
        check_range("t1_s", self.t1_s, 0.0, spec.duration_s)?;
        check_range("t2_s", self.t2_s, self.t1_s + spec.half_cycle_s(), spec.duration_s)
    }
}

fn check_range(name: &'static str, value: f64, min: f64, max: f64) -> Result<()> {
    if value.is_finite() && value >= min && value <= max {
        Ok(())
    } else {
        Err(Error::ParamOutOfRange {
            name,
            value,
            min,
            max,
        })
    }
}

/// A synthesized, labelled waveform.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    pub samples: Vec<f64>,
    pub label: EventClass,
    pub params: EventParams,
    pub spec: SignalSpec,
}

/// Right-continuous unit step: 1 for `t >= 0`, else 0.
#[inline]
pub fn unit_step(t: f64) -> f64 {
    if t >= 0.0 {
        1.0
    } else {
        0.0
    }
}

/// Envelope of the transient's added oscillation at time `t`.
pub fn transient_envelope(p: &EventParams, t: f64) -> f64 {
    if t < p.t1_s {
        0.0
    } else {
        p.alpha * (-(t - p.t1_s) / p.tau_s).exp()
    }
}

/// Evaluates the class model without any range checking.
///
/// [`generate`] and the `gen_*` functions validate first; this entry point
/// exists for identity cases such as `alpha = 0`.
pub fn synthesize(class: EventClass, spec: &SignalSpec, p: &EventParams) -> Vec<f64> {
    let omega = spec.omega();
    let v = spec.amplitude_pu;
    let window = |t: f64| unit_step(t - p.t1_s) - unit_step(t - p.t2_s);
    let h1 = p.h1();
    (0..spec.sample_count())
        .map(|i| {
            let t = spec.time(i);
            let fundamental = (omega * t).sin();
            match class {
                EventClass::Sag | EventClass::Interruption => {
                    v * (1.0 - p.alpha * window(t)) * fundamental
                }
                EventClass::Swell => v * (1.0 + p.alpha * window(t)) * fundamental,
                EventClass::Harmonics => {
                    v * (h1 * fundamental
                        + p.h3 * (3.0 * omega * t).sin()
                        + p.h5 * (5.0 * omega * t).sin()
                        + p.h7 * (7.0 * omega * t).sin())
                }
                EventClass::Transient => {
                    let osc = transient_envelope(p, t) * (TAU * p.omega_n_hz * t).sin();
                    v * (fundamental + osc)
                }
                EventClass::Flicker => {
                    v * (1.0 + p.alpha * (2.0 * PI * p.beta_hz * t).sin()) * fundamental
                }
            }
        })
        .collect()
}

/// Validates `p` for `class` and synthesizes the waveform.
pub fn generate(class: EventClass, spec: &SignalSpec, p: &EventParams) -> Result<Waveform> {
    spec.validate()?;
    p.validate(class, spec)?;
    Ok(Waveform {
        samples: synthesize(class, spec, p),
        label: class,
        params: *p,
        spec: *spec,
    })
}

pub fn gen_sag(spec: &SignalSpec, p: &EventParams) -> Result<Waveform> {
    generate(EventClass::Sag, spec, p)
}

pub fn gen_swell(spec: &SignalSpec, p: &EventParams) -> Result<Waveform> {
    generate(EventClass::Swell, spec, p)
}

pub fn gen_interruption(spec: &SignalSpec, p: &EventParams) -> Result<Waveform> {
    generate(EventClass::Interruption, spec, p)
}

pub fn gen_harmonics(spec: &SignalSpec, p: &EventParams) -> Result<Waveform> {
    generate(EventClass::Harmonics, spec, p)
}

pub fn gen_transient(spec: &SignalSpec, p: &EventParams) -> Result<Waveform> {
    generate(EventClass::Transient, spec, p)
}

pub fn gen_flicker(spec: &SignalSpec, p: &EventParams) -> Result<Waveform> {
    generate(EventClass::Flicker, spec, p)
}

/// Draws event parameters uniformly from the class ranges.
///
/// Event windows start in `[0.1, 0.5] x duration` and last between half a
/// cycle and the time remaining before the final 10 % of the record.
pub fn sample_params<R: Rng + ?Sized>(
    class: EventClass,
    rng: &mut R,
    spec: &SignalSpec,
) -> EventParams {
    let d = spec.duration_s;
    let mut p = EventParams {
        t1_s: 0.0,
        t2_s: d,
        ..EventParams::default()
    };
    let draw_window = |rng: &mut R, p: &mut EventParams| {
        let t1 = rng.gen_range(0.1 * d..=0.5 * d);
        let min_len = spec.half_cycle_s();
        let max_len = (d - t1 - 0.1 * d).max(min_len);
        let len = rng.gen_range(min_len..=max_len);
        p.t1_s = t1;
        p.t2_s = (t1 + len).min(d);
    };
    match class {
        EventClass::Sag | EventClass::Swell => {
            p.alpha = rng.gen_range(0.1..=0.9);
            draw_window(rng, &mut p);
        }
        EventClass::Interruption => {
            p.alpha = rng.gen_range(0.9..=1.0);
            draw_window(rng, &mut p);
        }
        EventClass::Harmonics => {
            p.h3 = rng.gen_range(0.05..=0.15);
            p.h5 = rng.gen_range(0.05..=0.15);
            p.h7 = rng.gen_range(0.05..=0.15);
        }
        EventClass::Transient => {
            p.alpha = rng.gen_range(0.1..=0.8);
            p.omega_n_hz = rng.gen_range(100.0..=400.0);
            p.tau_s = rng.gen_range(0.008..=0.04);
            p.t1_s = rng.gen_range(0.1 * d..=0.5 * d);
        }
        EventClass::Flicker => {
            p.alpha = rng.gen_range(0.1..=0.2);
            p.beta_hz = rng.gen_range(0.5..=25.0);
        }
    }
    p
}
