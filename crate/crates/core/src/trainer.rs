//! Stratified k-fold training with early stopping.
//!
//! Each fold trains a freshly initialized network with Nadam on shuffled
//! mini-batches, evaluates on its validation split after every epoch and
//! keeps the parameters of the best validation epoch. Per-fold randomness is
//! derived from `(seed, fold)` only, so folds can run in any order or in
//! parallel without changing the report.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;

use crate::dataset::{self, write_atomic, Dataset};
use crate::nn::io::save_model;
use crate::nn::{Architecture, Network, Tensor1D};
use crate::optim::{make_batches, NadamConfig, NadamState};
use crate::rng::{derive_seed, rng_for, stream};
use crate::signal::EventClass;
use crate::{Error, Result, NUM_CLASSES};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub architecture: Architecture,
    pub k_folds: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub min_delta: f64,
    pub batch_size: usize,
    pub seed: u64,
    /// Noise injected into the dataset before training, if any.
    pub noise_snr_db: Option<f64>,
    pub optimizer: NadamConfig,
    /// Stratified fraction held out from cross-validation and scored with
    /// the best fold's model.
    pub test_fraction: Option<f64>,
    /// Train folds on the rayon pool.
    pub parallel: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            architecture: Architecture::Cnn1c,
            k_folds: 10,
            max_epochs: 100,
            patience: 10,
            min_delta: 0.0001,
            batch_size: 32,
            seed: 0,
            noise_snr_db: None,
            optimizer: NadamConfig::default(),
            test_fraction: None,
            parallel: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k_folds < 2 {
            return Err(Error::InvalidConfig("k_folds must be at least 2".into()));
        }
        if self.patience < 1 {
            return Err(Error::InvalidConfig("patience must be at least 1".into()));
        }
        if !(self.min_delta >= 0.0) {
            return Err(Error::InvalidConfig("min_delta must be non-negative".into()));
        }
        if self.max_epochs < 1 || self.batch_size < 1 {
            return Err(Error::InvalidConfig(
                "max_epochs and batch_size must be at least 1".into(),
            ));
        }
        self.optimizer.validate()
    }
}

/// `counts[true][predicted]` over the six classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ConfusionMatrix {
    pub counts: [[u64; NUM_CLASSES]; NUM_CLASSES],
}

impl ConfusionMatrix {
    pub fn from_predictions(labels: &[usize], predicted: &[usize]) -> Self {
        let mut m = Self::default();
        for (&t, &p) in labels.iter().zip(predicted) {
            m.counts[t][p] += 1;
        }
        m
    }

    pub fn record(&mut self, truth: usize, predicted: usize) {
        self.counts[truth][predicted] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..NUM_CLASSES).map(|i| self.counts[i][i]).sum()
    }

    pub fn off_diagonal(&self) -> u64 {
        self.total() - self.trace()
    }

    pub fn accuracy(&self) -> f64 {
        match self.total() {
            0 => 0.0,
            n => self.trace() as f64 / n as f64,
        }
    }

    pub fn row_sums(&self) -> [u64; NUM_CLASSES] {
        self.counts.map(|row| row.iter().sum())
    }

    pub fn add(&mut self, other: &ConfusionMatrix) {
        for (a, b) in self.counts.iter_mut().flatten().zip(other.counts.iter().flatten()) {
            *a += b;
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("true\\predicted");
        for c in EventClass::ALL {
            out.push(',');
            out.push_str(c.name());
        }
        out.push('\n');
        for (c, row) in EventClass::ALL.iter().zip(&self.counts) {
            out.push_str(c.name());
            for v in row {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
        out
    }
}

/// Accuracy, mean cross-entropy and confusion of a network on some records.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub accuracy: f64,
    pub loss: f64,
    pub confusion: ConfusionMatrix,
}

/// Scores `net` on the records of `data` selected by `indices`.
pub fn evaluate(net: &Network, data: &Dataset, indices: &[usize]) -> Result<Evaluation> {
    if indices.is_empty() {
        return Err(Error::InvalidConfig("cannot evaluate on zero records".into()));
    }
    let mut confusion = ConfusionMatrix::default();
    let mut loss = 0.0;
    for &i in indices {
        let r = &data.records[i];
        let out = net.evaluate_example(&r.samples, r.label.index())?;
        loss += out.loss;
        confusion.record(r.label.index(), out.predicted);
    }
    Ok(Evaluation {
        accuracy: confusion.accuracy(),
        loss: loss / indices.len() as f64,
        confusion,
    })
}

pub fn evaluate_all(net: &Network, data: &Dataset) -> Result<Evaluation> {
    let all: Vec<usize> = (0..data.len()).collect();
    evaluate(net, data, &all)
}

/// True when none of the last `patience` epochs raised the running best
/// validation accuracy by strictly more than `min_delta`.
///
/// The first epoch always counts as an improvement, so at least
/// `patience + 1` epochs are needed before this can fire.
pub fn early_stop(val_acc_history: &[f64], patience: usize, min_delta: f64) -> bool {
    let mut best = f64::NEG_INFINITY;
    let mut last_improvement = 0;
    for (i, &acc) in val_acc_history.iter().enumerate() {
        if i == 0 || acc - best > min_delta {
            best = acc;
            last_improvement = i;
        }
    }
    match val_acc_history.len() {
        0 => false,
        n => n - 1 - last_improvement >= patience,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    /// Running accuracy over the epoch's training batches.
    pub train_acc: f64,
    pub train_loss: f64,
    pub val_acc: f64,
    pub val_loss: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FoldRecord {
    pub fold: usize,
    pub epoch_log: Vec<EpochStats>,
    /// Number of epochs run.
    pub stop_epoch: usize,
    pub early_stopped: bool,
    /// 1-based epoch whose parameters were kept.
    pub best_epoch: usize,
    pub best_val_acc: f64,
    /// Validation confusion of the kept parameters.
    pub confusion: ConfusionMatrix,
    pub model: Network,
    pub train_size: usize,
    pub val_size: usize,
}

/// Trains `net` on `train_idx`, validating on `val_idx` after every epoch.
///
/// Batches are reshuffled each epoch from `(shuffle_seed, epoch)`. Returns
/// the parameters of the best validation epoch (earliest on ties).
pub fn train_fold(
    mut net: Network,
    train_idx: &[usize],
    val_idx: &[usize],
    data: &Dataset,
    config: &TrainConfig,
    shuffle_seed: u64,
) -> Result<FoldRecord> {
    config.validate()?;
    if train_idx.is_empty() || val_idx.is_empty() {
        return Err(Error::InvalidConfig("empty training or validation split".into()));
    }
    let mut in_val = vec![false; data.len()];
    for &i in val_idx {
        in_val[i] = true;
    }

    let mut optimizer = NadamState::new(config.optimizer, &net.param_groups());
    let mut grads = net.zero_gradients();
    let mut log = Vec::new();
    let mut history = Vec::new();
    let mut best: Option<(usize, Evaluation, Network)> = None;
    let mut early_stopped = false;

    for epoch in 0..config.max_epochs {
        let batches = make_batches(
            train_idx,
            config.batch_size,
            &mut rng_for(shuffle_seed, stream::SHUFFLE, epoch as u64),
        )?;
        let (mut loss_sum, mut correct) = (0.0, 0usize);
        for batch in &batches {
            grads.zero();
            for &i in batch {
                if in_val[i] {
                    return Err(Error::Constraint(format!(
                        "validation record {i} reached a training batch"
                    )));
                }
                let r = &data.records[i];
                let out = net.backward(&Tensor1D::from_signal(&r.samples), r.label.index(), &mut grads)?;
                loss_sum += out.loss;
                correct += (out.predicted == r.label.index()) as usize;
            }
            grads.scale(1.0 / batch.len() as f64);
            optimizer.step(&mut net.param_groups_mut(), &grads.as_slices())?;
        }

        let val = evaluate(&net, data, val_idx)?;
        log.push(EpochStats {
            train_acc: correct as f64 / train_idx.len() as f64,
            train_loss: loss_sum / train_idx.len() as f64,
            val_acc: val.accuracy,
            val_loss: val.loss,
        });
        history.push(val.accuracy);
        if best.as_ref().is_none_or(|(_, b, _)| val.accuracy > b.accuracy) {
            best = Some((epoch + 1, val, net.clone()));
        }
        if early_stop(&history, config.patience, config.min_delta) {
            early_stopped = true;
            break;
        }
    }

    let (best_epoch, best_eval, model) = best.expect("at least one epoch runs");
    Ok(FoldRecord {
        fold: 0,
        stop_epoch: log.len(),
        epoch_log: log,
        early_stopped,
        best_epoch,
        best_val_acc: best_eval.accuracy,
        confusion: best_eval.confusion,
        model,
        train_size: train_idx.len(),
        val_size: val_idx.len(),
    })
}

#[derive(Debug, Clone)]
pub struct TrainReport {
    pub architecture: Architecture,
    pub config: TrainConfig,
    /// SNR of the data the folds were trained on (`None` = clean).
    pub noise_snr_db: Option<f64>,
    pub per_fold: Vec<FoldRecord>,
    /// Mean over folds of the best validation accuracy.
    pub mean_val_acc: f64,
    /// Validation confusion pooled over folds.
    pub confusion: ConfusionMatrix,
    /// Hold-out evaluation of the best fold's model, when requested.
    pub test: Option<Evaluation>,
    pub wall_time_s: f64,
}

impl TrainReport {
    /// Fold with the highest best validation accuracy (earliest on ties).
    pub fn best_fold(&self) -> &FoldRecord {
        let mut best = &self.per_fold[0];
        for f in &self.per_fold[1..] {
            if f.best_val_acc > best.best_val_acc {
                best = f;
            }
        }
        best
    }

    pub fn mean_stop_epoch(&self) -> f64 {
        self.per_fold.iter().map(|f| f.stop_epoch as f64).sum::<f64>() / self.per_fold.len() as f64
    }

    pub fn epoch_log_csv(&self) -> String {
        let mut out = String::from("fold,epoch,train_acc,train_loss,val_acc,val_loss\n");
        for f in &self.per_fold {
            for (e, s) in f.epoch_log.iter().enumerate() {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{}",
                    f.fold,
                    e + 1,
                    s.train_acc,
                    s.train_loss,
                    s.val_acc,
                    s.val_loss
                );
            }
        }
        out
    }

    pub fn folds_csv(&self) -> String {
        let mut out = String::from("fold,stop_epoch,early_stopped,best_epoch,best_val_acc,train_size,val_size\n");
        for f in &self.per_fold {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                f.fold, f.stop_epoch, f.early_stopped, f.best_epoch, f.best_val_acc, f.train_size, f.val_size
            );
        }
        out
    }

    /// One header line and one data line; the structure string is quoted.
    pub fn summary_csv(&self) -> String {
        let snr = self.noise_snr_db.map(|s| s.to_string()).unwrap_or_default();
        let test = self.test.map(|t| t.accuracy.to_string()).unwrap_or_default();
        format!(
            "architecture,structure,noise_snr_db,k_folds,mean_val_acc,mean_stop_epoch,best_fold,test_acc\n\
             {},\"{}\",{},{},{},{},{},{}\n",
            self.architecture.name(),
            self.architecture.structure(),
            snr,
            self.per_fold.len(),
            self.mean_val_acc,
            self.mean_stop_epoch(),
            self.best_fold().fold,
            test
        )
    }

    /// Writes `epoch_log.csv`, `folds.csv`, `confusion.csv`, `summary.csv`
    /// and `model.pqnn` (best fold) into `dir`.
    pub fn write_bundle(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        write_atomic(&dir.join("epoch_log.csv"), self.epoch_log_csv().as_bytes())?;
        write_atomic(&dir.join("folds.csv"), self.folds_csv().as_bytes())?;
        write_atomic(&dir.join("confusion.csv"), self.confusion.to_csv().as_bytes())?;
        if let Some(test) = &self.test {
            write_atomic(&dir.join("test_confusion.csv"), test.confusion.to_csv().as_bytes())?;
        }
        write_atomic(&dir.join("summary.csv"), self.summary_csv().as_bytes())?;
        save_model(&self.best_fold().model, &dir.join("model.pqnn"))
    }
}

/// Stratified k-fold cross-validation of `config.architecture` on `data`.
pub fn run_cv(data: &Dataset, config: &TrainConfig) -> Result<TrainReport> {
    config.validate()?;
    let started = Instant::now();
    let noisy;
    let data = match config.noise_snr_db {
        Some(_) if data.noise_snr_db.is_some() => {
            return Err(Error::InvalidConfig(
                "dataset already carries noise; refusing to add more".into(),
            ))
        }
        Some(snr) => {
            noisy = dataset::with_noise(data, snr, derive_seed(config.seed, stream::NOISE, 0))?;
            &noisy
        }
        None => data,
    };

    let labels = data.labels();
    let (pool, test_idx) = match config.test_fraction {
        Some(f) => dataset::stratified_holdout(&labels, f, config.seed)?,
        None => ((0..data.len()).collect(), Vec::new()),
    };
    let pool_labels: Vec<usize> = pool.iter().map(|&i| labels[i]).collect();
    let folds = dataset::stratified_folds_for_labels(
        &pool_labels,
        config.k_folds,
        derive_seed(config.seed, stream::FOLDS, 0),
    )?;

    let input_len = data.spec.sample_count();
    let train_one = |fold: usize| -> Result<FoldRecord> {
        let (train_pos, val_pos) = folds.split(fold);
        let train: Vec<usize> = train_pos.iter().map(|&p| pool[p]).collect();
        let val: Vec<usize> = val_pos.iter().map(|&p| pool[p]).collect();
        let fold_seed = derive_seed(config.seed, stream::FOLD, fold as u64);
        let net = config
            .architecture
            .build(input_len, derive_seed(fold_seed, stream::INIT, 0))?;
        let mut record = train_fold(net, &train, &val, data, config, fold_seed)?;
        record.fold = fold;
        Ok(record)
    };
    let per_fold: Vec<FoldRecord> = if config.parallel {
        (0..config.k_folds).into_par_iter().map(train_one).collect::<Result<_>>()?
    } else {
        (0..config.k_folds).map(train_one).collect::<Result<_>>()?
    };

    let mean_val_acc = per_fold.iter().map(|f| f.best_val_acc).sum::<f64>() / per_fold.len() as f64;
    let mut confusion = ConfusionMatrix::default();
    for f in &per_fold {
        confusion.add(&f.confusion);
    }
    let mut report = TrainReport {
        architecture: config.architecture,
        config: config.clone(),
        noise_snr_db: data.noise_snr_db,
        per_fold,
        mean_val_acc,
        confusion,
        test: None,
        wall_time_s: 0.0,
    };
    if !test_idx.is_empty() {
        report.test = Some(evaluate(&report.best_fold().model, data, &test_idx)?);
    }
    report.wall_time_s = started.elapsed().as_secs_f64();
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_history_stops_after_patience() {
        assert!(early_stop(&[0.5; 11], 10, 0.0001));
        assert!(!early_stop(&[0.5; 10], 10, 0.0001));
        assert!(!early_stop(&[], 10, 0.0001));
    }

    #[test]
    fn steady_improvement_never_stops() {
        let h: Vec<f64> = (0..60).map(|i| 0.3 + 0.01 * i as f64).collect();
        for n in 1..=h.len() {
            assert!(!early_stop(&h[..n], 10, 0.0001));
        }
    }

    #[test]
    fn improvement_equal_to_min_delta_does_not_count() {
        // exactly representable values: 0.75 - 0.5 == 0.25
        assert!(early_stop(&[0.5, 0.75], 1, 0.25));
        assert!(!early_stop(&[0.5, 0.76], 1, 0.25));
        assert!(early_stop(&[0.5, 1.0], 1, 1.0));
    }

    #[test]
    fn small_gains_do_not_reset_patience() {
        let h = [0.5, 0.5004, 0.5008, 0.5009];
        assert!(early_stop(&h, 3, 0.001));
    }

    #[test]
    fn confusion_basics() {
        let labels = [0, 1, 2, 3, 4, 5, 0, 1, 2, 3, 4, 5];
        let perfect = ConfusionMatrix::from_predictions(&labels, &labels);
        assert_eq!(perfect.accuracy(), 1.0);
        assert_eq!(perfect.off_diagonal(), 0);
        let constant = ConfusionMatrix::from_predictions(&labels, &[0; 12]);
        assert!((constant.accuracy() - 1.0 / 6.0).abs() < 1e-15);
        for row in constant.counts {
            assert_eq!(row[0], 2);
            assert_eq!(row[1..].iter().sum::<u64>(), 0);
        }
        assert_eq!(constant.row_sums(), [2; 6]);
        let csv = constant.to_csv();
        assert_eq!(csv.lines().count(), 7);
        assert!(csv.lines().nth(1).unwrap().starts_with("sag,2,0"));
    }

    #[test]
    fn config_validation() {
        let ok = TrainConfig::default();
        ok.validate().unwrap();
        for bad in [
            TrainConfig { k_folds: 1, ..ok.clone() },
            TrainConfig { patience: 0, ..ok.clone() },
            TrainConfig { min_delta: -1.0, ..ok.clone() },
            TrainConfig { batch_size: 0, ..ok.clone() },
        ] {
            assert!(bad.validate().is_err());
        }
    }
}
