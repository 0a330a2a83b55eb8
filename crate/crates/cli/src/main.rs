//! `pqcnn`: generate power-quality datasets, train and evaluate the 1-D CNN
//! classifiers, and tabulate results.

mod manifest;
mod output;
mod report;
mod svg;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use pqcore::dataset::{self, write_atomic, Dataset};
use pqcore::nn::io::load_model;
use pqcore::nn::Architecture;
use pqcore::optim::NadamConfig;
use pqcore::rng::{derive_seed, stream};
use pqcore::signal::{EventClass, SignalSpec};
use pqcore::trainer::{self, TrainConfig};

use manifest::Manifest;
use output::StagedDir;

#[derive(Debug, Parser)]
#[command(name = "pqcnn", version, about = "Power-quality disturbance synthesis and 1-D CNN classification")]
struct Cli {
    /// Worker threads; 1 forces fully serial execution.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Synthesize a labelled dataset (.pqds).
    Generate(GenerateArgs),
    /// Stratified k-fold training of one architecture.
    Train(TrainArgs),
    /// Score a saved model on a dataset.
    Evaluate(EvaluateArgs),
    /// Tabulate accuracies from training bundles.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
struct SignalArgs {
    #[arg(long, default_value_t = 5000.0)]
    sample_rate: f64,
    #[arg(long, default_value_t = 60.0)]
    fundamental: f64,
    #[arg(long, default_value_t = 0.2)]
    duration: f64,
    #[arg(long, default_value_t = 1.0)]
    amplitude: f64,
}

#[derive(Debug, Args)]
struct GenerateArgs {
    #[command(flatten)]
    signal: SignalArgs,
    /// Waveforms per class.
    #[arg(long, default_value_t = 500, value_parser = clap::value_parser!(u64).range(1..))]
    per_class: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Add white Gaussian noise at this SNR (dB); unset means clean.
    #[arg(long)]
    snr_db: Option<f64>,
    /// Output dataset file.
    #[arg(long)]
    out: PathBuf,
    /// Also export the whole dataset as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Write one example waveform per class (CSV + SVG) into this directory.
    #[arg(long)]
    plot: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long)]
    data: PathBuf,
    /// cnn-1a, cnn-1b, cnn-1c or cnn-1d.
    #[arg(long, default_value = "cnn-1c")]
    arch: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10)]
    k_folds: usize,
    #[arg(long, default_value_t = 100)]
    max_epochs: usize,
    #[arg(long, default_value_t = 10)]
    patience: usize,
    #[arg(long, default_value_t = 0.0001)]
    min_delta: f64,
    #[arg(long, default_value_t = 32)]
    batch_size: usize,
    #[arg(long, default_value_t = 0.001)]
    lr: f64,
    #[arg(long, default_value_t = 0.9)]
    beta1: f64,
    #[arg(long, default_value_t = 0.999)]
    beta2: f64,
    #[arg(long, default_value_t = 1e-8)]
    eps: f64,
    /// Inject noise at this SNR (dB) before training.
    #[arg(long)]
    snr_db: Option<f64>,
    /// Hold out this stratified fraction as a separate test split.
    #[arg(long)]
    test_fraction: Option<f64>,
    /// Bundle directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Evaluate on a noisy copy of the data at this SNR (dB).
    #[arg(long)]
    snr_db: Option<f64>,
    /// Seed for the noise copy.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// Directory holding training bundles (or a single bundle).
    #[arg(long)]
    dir: PathBuf,
    /// Also write the table to this file.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global() {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    }
    let serial = cli.threads == 1;
    let result = match cli.command {
        Command::Generate(a) => cmd_generate(&a),
        Command::Train(a) => cmd_train(&a, serial),
        Command::Evaluate(a) => cmd_evaluate(&a),
        Command::Report(a) => cmd_report(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = format!("{e:#}").replace('\n', " ");
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}

fn manifest_path(file: &Path) -> PathBuf {
    let mut name = file.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest");
    file.with_file_name(name)
}

fn cmd_generate(a: &GenerateArgs) -> Result<()> {
    let spec = SignalSpec::new(
        a.signal.sample_rate,
        a.signal.fundamental,
        a.signal.duration,
        a.signal.amplitude,
    )?;
    let clean = dataset::build_dataset(&spec, a.per_class as usize, a.seed)?;
    let data = match a.snr_db {
        Some(snr) => dataset::with_noise(&clean, snr, derive_seed(a.seed, stream::NOISE, 0))?,
        None => clean,
    };

    let mut m = Manifest::new("generate");
    m.set("sample_rate_hz", spec.sample_rate_hz)
        .set("fundamental_hz", spec.fundamental_hz)
        .set("duration_s", spec.duration_s)
        .set("amplitude_pu", spec.amplitude_pu)
        .set("per_class", a.per_class)
        .set("seed", a.seed)
        .set_opt("noise_snr_db", a.snr_db)
        .set("records", data.len())
        .set("output", a.out.display())
        .set_opt("csv", a.csv.as_ref().map(|p| p.display().to_string()))
        .set_opt("plot_dir", a.plot.as_ref().map(|p| p.display().to_string()));

    let plots = a.plot.as_ref().map(|dir| write_plots(&data, dir, &m)).transpose()?;
    dataset::save_dataset(&data, &a.out).with_context(|| format!("writing {}", a.out.display()))?;
    let finish = || -> Result<()> {
        m.write(&manifest_path(&a.out))?;
        if let Some(csv) = &a.csv {
            write_atomic(csv, dataset::to_csv(&data).as_bytes())?;
        }
        if let Some(p) = plots {
            p.commit()?;
        }
        Ok(())
    };
    if let Err(e) = finish() {
        let _ = fs::remove_file(&a.out);
        let _ = fs::remove_file(manifest_path(&a.out));
        return Err(e);
    }
    println!(
        "wrote {} records ({} per class) to {}",
        data.len(),
        a.per_class,
        a.out.display()
    );
    Ok(())
}

fn write_plots(data: &Dataset, dir: &Path, m: &Manifest) -> Result<StagedDir> {
    let staged = StagedDir::new(dir)?;
    for class in EventClass::ALL {
        let Some(w) = data.records.iter().find(|r| r.label == class) else {
            continue;
        };
        let points: Vec<(f64, f64)> = w
            .samples
            .iter()
            .enumerate()
            .map(|(i, &v)| (w.spec.time(i), v))
            .collect();
        let mut csv = String::from("t_s,v_pu\n");
        for (t, v) in &points {
            csv.push_str(&format!("{t},{v}\n"));
        }
        let stem = format!("{}_{}", class.code(), class.name());
        write_atomic(&staged.path().join(format!("{stem}.csv")), csv.as_bytes())?;
        let title = format!("Class {}: {}", class.code(), class.name());
        let svg = svg::line_chart(&title, &points);
        write_atomic(&staged.path().join(format!("{stem}.svg")), svg.as_bytes())?;
    }
    m.write(&staged.path().join("manifest.txt"))?;
    Ok(staged)
}

fn cmd_train(a: &TrainArgs, serial: bool) -> Result<()> {
    let architecture: Architecture = a.arch.parse()?;
    let data = dataset::load_dataset(&a.data).with_context(|| format!("reading {}", a.data.display()))?;
    let config = TrainConfig {
        architecture,
        k_folds: a.k_folds,
        max_epochs: a.max_epochs,
        patience: a.patience,
        min_delta: a.min_delta,
        batch_size: a.batch_size,
        seed: a.seed,
        noise_snr_db: a.snr_db,
        optimizer: NadamConfig {
            lr: a.lr,
            beta1: a.beta1,
            beta2: a.beta2,
            eps: a.eps,
        },
        test_fraction: a.test_fraction,
        parallel: !serial,
    };
    let report = trainer::run_cv(&data, &config)?;

    let staged = StagedDir::new(&a.out)?;
    report.write_bundle(staged.path())?;
    let mut m = Manifest::new("train");
    m.set("architecture", architecture)
        .set("structure", architecture.structure())
        .set("data", a.data.display())
        .set("records", data.len())
        .set_opt("dataset_noise_snr_db", data.noise_snr_db)
        .set("seed", a.seed)
        .set("k_folds", a.k_folds)
        .set("max_epochs", a.max_epochs)
        .set("patience", a.patience)
        .set("min_delta", a.min_delta)
        .set("batch_size", a.batch_size)
        .set("lr", a.lr)
        .set("beta1", a.beta1)
        .set("beta2", a.beta2)
        .set("eps", a.eps)
        .set_opt("snr_db", a.snr_db)
        .set_opt("test_fraction", a.test_fraction)
        .set("output", a.out.display());
    m.write(&staged.path().join("manifest.txt"))?;
    staged.commit()?;

    println!("{} ({})", architecture, architecture.structure());
    for f in &report.per_fold {
        println!(
            "  fold {:>2}: best val acc {:.4} at epoch {:>3}, stopped after {:>3} epochs{}",
            f.fold,
            f.best_val_acc,
            f.best_epoch,
            f.stop_epoch,
            if f.early_stopped { "" } else { " (epoch limit)" }
        );
    }
    println!(
        "mean val acc {:.4}, mean stop epoch {:.1}, {:.1}s",
        report.mean_val_acc,
        report.mean_stop_epoch(),
        report.wall_time_s
    );
    if let Some(t) = &report.test {
        println!("hold-out test acc {:.4}", t.accuracy);
    }
    println!("bundle written to {}", a.out.display());
    Ok(())
}

fn cmd_evaluate(a: &EvaluateArgs) -> Result<()> {
    let net = load_model(&a.model).with_context(|| format!("reading {}", a.model.display()))?;
    let mut data = dataset::load_dataset(&a.data).with_context(|| format!("reading {}", a.data.display()))?;
    if data.spec.sample_count() != net.input_len() {
        bail!(
            "shape mismatch: model expects {} samples per record, dataset has {}",
            net.input_len(),
            data.spec.sample_count()
        );
    }
    if let Some(snr) = a.snr_db {
        if data.noise_snr_db.is_some() {
            bail!("dataset already carries noise; refusing to add more");
        }
        data = dataset::with_noise(&data, snr, derive_seed(a.seed, stream::NOISE, 0))?;
    }
    let eval = trainer::evaluate_all(&net, &data)?;

    let staged = StagedDir::new(&a.out)?;
    let metrics = format!(
        "architecture,records,noise_snr_db,accuracy,loss\n{},{},{},{},{}\n",
        net.architecture(),
        data.len(),
        data.noise_snr_db.map(|s| s.to_string()).unwrap_or_default(),
        eval.accuracy,
        eval.loss
    );
    write_atomic(&staged.path().join("metrics.csv"), metrics.as_bytes())?;
    write_atomic(&staged.path().join("confusion.csv"), eval.confusion.to_csv().as_bytes())?;
    let mut m = Manifest::new("evaluate");
    m.set("model", a.model.display())
        .set("data", a.data.display())
        .set_opt("snr_db", a.snr_db)
        .set("seed", a.seed)
        .set("output", a.out.display());
    m.write(&staged.path().join("manifest.txt"))?;
    staged.commit()?;
    println!(
        "{} on {} records: accuracy {:.4}, loss {:.4}",
        net.architecture(),
        data.len(),
        eval.accuracy,
        eval.loss
    );
    Ok(())
}

fn cmd_report(a: &ReportArgs) -> Result<()> {
    let bundles = report::find_bundles(&a.dir)?;
    let summaries = report::load_summaries(&bundles)?;
    let table = report::render_table(&summaries);
    if let Some(out) = &a.out {
        write_atomic(out, table.as_bytes())?;
    }
    print!("{table}");
    Ok(())
}

