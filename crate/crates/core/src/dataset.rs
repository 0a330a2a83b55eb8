//! Labelled waveform collections, noise injection, stratified folds and the
//! `.pqds` container.
//!
//! # `.pqds` layout (little-endian throughout)
//!
//! ```text
//! magic        4 bytes  "PQDS"
//! version      u16      = 1
//! spec         4 x f64  sample_rate_hz, fundamental_hz, duration_s, amplitude_pu
//! seed         u64
//! noise flag   u8       0 = clean, 1 = noisy
//! snr_db       f64      meaningful only when the flag is 1
//! count        u64      number of records
//! samples      u32      samples per record
//! records      count x { label u8 (1..=6),
//!                        params 9 x f64 (alpha, t1, t2, h3, h5, h7,
//!                                        omega_n_hz, tau_s, beta_hz),
//!                        samples x f64 }
//! ```

use std::fs;
use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::rng::{rng_for, stream};
use crate::signal::{self, EventClass, EventParams, SignalSpec, Waveform};
use crate::{Error, Result, NUM_CLASSES};

pub const DATASET_MAGIC: &[u8; 4] = b"PQDS";
pub const DATASET_VERSION: u16 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub spec: SignalSpec,
    pub records: Vec<Waveform>,
    pub seed: u64,
    /// SNR of the injected noise, `None` for clean data.
    pub noise_snr_db: Option<f64>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Record count per class, indexed by [`EventClass::index`].
    pub fn class_counts(&self) -> [usize; NUM_CLASSES] {
        let mut counts = [0; NUM_CLASSES];
        for r in &self.records {
            counts[r.label.index()] += 1;
        }
        counts
    }

    pub fn labels(&self) -> Vec<usize> {
        self.records.iter().map(|r| r.label.index()).collect()
    }

    /// Copy restricted to `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            spec: self.spec,
            records: indices.iter().map(|&i| self.records[i].clone()).collect(),
            seed: self.seed,
            noise_snr_db: self.noise_snr_db,
        }
    }
}

/// Builds `per_class` waveforms of each class, class-major.
///
/// Record `i` draws its parameters from a generator keyed on `(seed, i)`, so
/// the result does not depend on the order in which records are produced.
pub fn build_dataset(spec: &SignalSpec, per_class: usize, seed: u64) -> Result<Dataset> {
    if per_class == 0 {
        return Err(Error::InvalidConfig("per_class must be at least 1".into()));
    }
    spec.validate()?;
    let mut records = Vec::with_capacity(per_class * NUM_CLASSES);
    for class in EventClass::ALL {
        for j in 0..per_class {
            let index = class.index() * per_class + j;
            let mut rng = rng_for(seed, stream::PARAMS, index as u64);
            let params = signal::sample_params(class, &mut rng, spec);
            records.push(signal::generate(class, spec, &params)?);
        }
    }
    Ok(Dataset {
        spec: *spec,
        records,
        seed,
        noise_snr_db: None,
    })
}

/// Mean square of `samples`.
pub fn signal_power(samples: &[f64]) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    samples.iter().map(|x| x * x).sum::<f64>() / samples.len() as f64
}

/// Adds zero-mean white Gaussian noise at `snr_db` relative to the clean
/// waveform's mean-square power. `f64::INFINITY` returns the input unchanged.
pub fn add_awgn<R: Rng + ?Sized>(w: &Waveform, snr_db: f64, rng: &mut R) -> Result<Waveform> {
    if snr_db == f64::INFINITY {
        return Ok(w.clone());
    }
    if !snr_db.is_finite() {
        return Err(Error::InvalidConfig(format!("snr_db must be finite, got {snr_db}")));
    }
    let power = signal_power(&w.samples);
    if power <= 0.0 {
        return Err(Error::SilentSignal);
    }
    let sigma = (power / 10f64.powf(snr_db / 10.0)).sqrt();
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let samples = w.samples.iter().map(|&x| x + normal.sample(rng)).collect();
    Ok(Waveform {
        samples,
        ..w.clone()
    })
}

/// Returns a noisy copy of `d`; record `i` uses a noise generator keyed on
/// `(seed, i)`. The clean dataset is left untouched.
pub fn with_noise(d: &Dataset, snr_db: f64, seed: u64) -> Result<Dataset> {
    let records = d
        .records
        .iter()
        .enumerate()
        .map(|(i, w)| add_awgn(w, snr_db, &mut rng_for(seed, stream::NOISE, i as u64)))
        .collect::<Result<Vec<_>>>()?;
    Ok(Dataset {
        records,
        noise_snr_db: (snr_db != f64::INFINITY).then_some(snr_db),
        ..d.clone()
    })
}

/// Fold membership for stratified k-fold cross-validation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldAssignment {
    pub k: usize,
    pub fold_of: Vec<usize>,
}

impl FoldAssignment {
    /// `(train, validation)` record indices for `fold`, each ascending.
    pub fn split(&self, fold: usize) -> (Vec<usize>, Vec<usize>) {
        let (val, train): (Vec<usize>, Vec<usize>) =
            (0..self.fold_of.len()).partition(|&i| self.fold_of[i] == fold);
        (train, val)
    }

    /// `hist[fold][class]` for the given per-record labels.
    pub fn histogram(&self, labels: &[usize]) -> Vec<[usize; NUM_CLASSES]> {
        let mut hist = vec![[0; NUM_CLASSES]; self.k];
        for (&f, &l) in self.fold_of.iter().zip(labels) {
            hist[f][l] += 1;
        }
        hist
    }
}

/// Stratified fold assignment over class labels.
///
/// Each class's records are shuffled and dealt round-robin, with the starting
/// fold rotated by the number of records already dealt so fold totals stay
/// balanced as well.
pub fn stratified_folds_for_labels(
    labels: &[usize],
    k: usize,
    seed: u64,
) -> Result<FoldAssignment> {
    if k < 2 {
        return Err(Error::InvalidConfig(format!("k must be at least 2, got {k}")));
    }
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); NUM_CLASSES];
    for (i, &l) in labels.iter().enumerate() {
        if l >= NUM_CLASSES {
            return Err(Error::LabelOutOfRange {
                label: l,
                classes: NUM_CLASSES,
            });
        }
        by_class[l].push(i);
    }
    let mut fold_of = vec![0; labels.len()];
    let mut dealt = 0usize;
    for (class, members) in by_class.iter_mut().enumerate() {
        if members.is_empty() {
            continue;
        }
        if members.len() < k {
            return Err(Error::TooFewRecords {
                class: EventClass::ALL[class].name(),
                have: members.len(),
                need: k,
            });
        }
        members.shuffle(&mut rng_for(seed, stream::FOLDS, class as u64));
        for (pos, &i) in members.iter().enumerate() {
            fold_of[i] = (dealt + pos) % k;
        }
        dealt += members.len();
    }
    Ok(FoldAssignment { k, fold_of })
}

pub fn stratified_folds(d: &Dataset, k: usize, seed: u64) -> Result<FoldAssignment> {
    stratified_folds_for_labels(&d.labels(), k, seed)
}

/// Stratified hold-out: returns `(rest, held_out)` with roughly `fraction`
/// of every class in `held_out`.
pub fn stratified_holdout(
    labels: &[usize],
    fraction: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "hold-out fraction must lie in (0, 1), got {fraction}"
        )));
    }
    let mut rest = Vec::new();
    let mut held = Vec::new();
    for class in 0..NUM_CLASSES {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        members.shuffle(&mut rng_for(seed, stream::HOLDOUT, class as u64));
        let n_held = ((members.len() as f64) * fraction).round() as usize;
        held.extend_from_slice(&members[..n_held]);
        rest.extend_from_slice(&members[n_held..]);
    }
    rest.sort_unstable();
    held.sort_unstable();
    Ok((rest, held))
}

pub fn encode_dataset(d: &Dataset) -> Vec<u8> {
    let n = d.spec.sample_count();
    let mut buf = Vec::with_capacity(64 + d.records.len() * (1 + 72 + 8 * n));
    buf.extend_from_slice(DATASET_MAGIC);
    buf.extend_from_slice(&DATASET_VERSION.to_le_bytes());
    for x in [
        d.spec.sample_rate_hz,
        d.spec.fundamental_hz,
        d.spec.duration_s,
        d.spec.amplitude_pu,
    ] {
        buf.extend_from_slice(&x.to_le_bytes());
    }
    buf.extend_from_slice(&d.seed.to_le_bytes());
    buf.push(d.noise_snr_db.is_some() as u8);
    buf.extend_from_slice(&d.noise_snr_db.unwrap_or(0.0).to_le_bytes());
    buf.extend_from_slice(&(d.records.len() as u64).to_le_bytes());
    buf.extend_from_slice(&(n as u32).to_le_bytes());
    for r in &d.records {
        buf.push(r.label.code());
        let p = &r.params;
        for x in [
            p.alpha,
            p.t1_s,
            p.t2_s,
            p.h3,
            p.h5,
            p.h7,
            p.omega_n_hz,
            p.tau_s,
            p.beta_hz,
        ] {
            buf.extend_from_slice(&x.to_le_bytes());
        }
        for x in &r.samples {
            buf.extend_from_slice(&x.to_le_bytes());
        }
    }
    buf
}

/// Little-endian reader that reports the byte offset of any failure.
pub(crate) struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub(crate) fn new(buf: &'a [u8]) -> Self {
        Self { buf, pos: 0 }
    }

    pub(crate) fn offset(&self) -> u64 {
        self.pos as u64
    }

    pub(crate) fn malformed(&self, reason: impl Into<String>) -> Error {
        Error::Malformed {
            offset: self.offset(),
            reason: reason.into(),
        }
    }

    pub(crate) fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(self.malformed(format!(
                "truncated while reading {what} ({} of {n} bytes available)",
                self.buf.len() - self.pos
            )));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    pub(crate) fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }

    pub(crate) fn u16(&mut self, what: &str) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }

    pub(crate) fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    pub(crate) fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    pub(crate) fn f64(&mut self, what: &str) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    pub(crate) fn f64s(&mut self, n: usize, what: &str) -> Result<Vec<f64>> {
        let bytes = self.take(n.checked_mul(8).ok_or_else(|| self.malformed("length overflow"))?, what)?;
        Ok(bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    pub(crate) fn finish(&self) -> Result<()> {
        if self.pos != self.buf.len() {
            return Err(self.malformed(format!(
                "{} trailing bytes after last record",
                self.buf.len() - self.pos
            )));
        }
        Ok(())
    }
}

pub fn decode_dataset(buf: &[u8]) -> Result<Dataset> {
    let mut r = Reader::new(buf);
    if r.take(4, "magic")? != DATASET_MAGIC {
        return Err(Error::Malformed {
            offset: 0,
            reason: "bad magic, not a .pqds file".into(),
        });
    }
    let version = r.u16("version")?;
    if version != DATASET_VERSION {
        return Err(Error::VersionMismatch {
            found: version,
            expected: DATASET_VERSION,
        });
    }
    let spec_at = r.offset();
    let spec = SignalSpec {
        sample_rate_hz: r.f64("spec")?,
        fundamental_hz: r.f64("spec")?,
        duration_s: r.f64("spec")?,
        amplitude_pu: r.f64("spec")?,
    };
    spec.validate().map_err(|e| Error::Malformed {
        offset: spec_at,
        reason: format!("invalid signal spec: {e}"),
    })?;
    let seed = r.u64("seed")?;
    let noisy = r.u8("noise flag")?;
    let snr = r.f64("snr")?;
    let noise_snr_db = match noisy {
        0 => None,
        1 => Some(snr),
        other => return Err(r.malformed(format!("noise flag {other} is not 0 or 1"))),
    };
    let count = r.u64("record count")?;
    let n = r.u32("samples per record")? as usize;
    if n != spec.sample_count() {
        return Err(r.malformed(format!(
            "{n} samples per record, spec implies {}",
            spec.sample_count()
        )));
    }
    let record_len = 1 + 72 + 8 * n as u64;
    let remaining = (buf.len() as u64).saturating_sub(r.offset());
    if count.checked_mul(record_len).is_none_or(|need| need > remaining) {
        return Err(r.malformed(format!(
            "{count} records need {} bytes, {remaining} remain",
            count.saturating_mul(record_len)
        )));
    }
    let mut records = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let code = r.u8("label")?;
        let label = EventClass::from_code(code)
            .ok_or_else(|| Error::Malformed {
                offset: r.offset() - 1,
                reason: format!("label {code} outside 1..=6"),
            })?;
        let p = r.f64s(9, "params")?;
        let params = EventParams {
            alpha: p[0],
            t1_s: p[1],
            t2_s: p[2],
            h3: p[3],
            h5: p[4],
            h7: p[5],
            omega_n_hz: p[6],
            tau_s: p[7],
            beta_hz: p[8],
        };
        let samples = r.f64s(n, "samples")?;
        records.push(Waveform {
            samples,
            label,
            params,
            spec,
        });
    }
    r.finish()?;
    Ok(Dataset {
        spec,
        records,
        seed,
        noise_snr_db,
    })
}

/// Writes `bytes` to `path` through a sibling temporary file so a failure
/// never leaves a partial file behind.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::InvalidConfig(format!("{} is not a file path", path.display())))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(file_name);
    tmp_name.push(format!(".tmp{}", std::process::id()));
    let tmp = path.with_file_name(tmp_name);
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    Ok(result?)
}

pub fn save_dataset(d: &Dataset, path: &Path) -> Result<()> {
    write_atomic(path, &encode_dataset(d))
}

pub fn load_dataset(path: &Path) -> Result<Dataset> {
    decode_dataset(&fs::read(path)?)
}

/// CSV for inspection: header `label,s0,s1,...`, one row per record with
/// the class code first. Not intended for round-tripping.
pub fn to_csv(d: &Dataset) -> String {
    let n = d.spec.sample_count();
    let mut out = String::from("label");
    for i in 0..n {
        out.push_str(&format!(",s{i}"));
    }
    out.push('\n');
    for r in &d.records {
        out.push_str(&r.label.code().to_string());
        for x in &r.samples {
            out.push(',');
            out.push_str(&x.to_string());
        }
        out.push('\n');
    }
    out
}
