use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn pqcnn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pqcnn"))
        .args(args)
        .output()
        .expect("failed to spawn pqcnn")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("pqcnn-{name}-{}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn generate(dir: &Path, name: &str, extra: &[&str]) -> PathBuf {
    let out = dir.join(name);
    let mut args = vec!["generate", "--per-class", "2", "--seed", "7", "--out", s(&out)];
    args.extend_from_slice(extra);
    let o = pqcnn(&args);
    assert!(o.status.success(), "{}", stderr(&o));
    out
}

fn train(data: &Path, out: &Path) -> Output {
    pqcnn(&[
        "--threads", "1", "train", "--data", s(data), "--arch", "cnn-1d", "--k-folds", "2",
        "--max-epochs", "2", "--batch-size", "4", "--seed", "7", "--out", s(out),
    ])
}

#[test]
fn zero_per_class_is_a_usage_error() {
    let dir = scratch("zero");
    let out = dir.join("d.pqds");
    let o = pqcnn(&["generate", "--per-class", "0", "--out", s(&out)]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("--per-class"));
    assert!(!out.exists());
    assert_eq!(fs::read_dir(&dir).unwrap().count(), 0);
}

#[test]
fn generate_writes_dataset_manifest_and_plots() {
    let dir = scratch("gen");
    let plots = dir.join("plots");
    let data = generate(&dir, "d.pqds", &["--snr-db", "80", "--plot", s(&plots)]);
    assert!(data.exists());
    let manifest = fs::read_to_string(dir.join("d.pqds.manifest")).unwrap();
    assert!(manifest.lines().any(|l| l == "noise_snr_db: 80"), "{manifest}");
    assert!(manifest.lines().any(|l| l == "records: 12"));
    let mut names: Vec<String> = fs::read_dir(&plots)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(names.len(), 13);
    assert!(names.contains(&"1_sag.svg".to_string()));
    assert!(names.contains(&"6_flicker.csv".to_string()));
    assert!(names.contains(&"manifest.txt".to_string()));
}

#[test]
fn unknown_architecture_lists_valid_names() {
    let dir = scratch("arch");
    let data = generate(&dir, "d.pqds", &[]);
    let out = dir.join("run");
    let o = pqcnn(&["train", "--data", s(&data), "--arch", "bogus", "--out", s(&out)]);
    assert!(!o.status.success());
    let err = stderr(&o);
    for name in ["cnn-1a", "cnn-1b", "cnn-1c", "cnn-1d"] {
        assert!(err.contains(name), "{err}");
    }
    assert_eq!(err.trim_end().lines().count(), 1);
    assert!(!out.exists());
}

#[test]
fn repeated_serial_runs_produce_identical_outputs() {
    let dir = scratch("repeat");
    let data = generate(&dir, "d.pqds", &[]);
    let (a, b) = (dir.join("a"), dir.join("b"));
    for out in [&a, &b] {
        let o = train(&data, out);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    for file in ["summary.csv", "folds.csv", "epoch_log.csv", "confusion.csv", "model.pqnn"] {
        let x = fs::read(a.join(file)).unwrap();
        let y = fs::read(b.join(file)).unwrap();
        assert_eq!(x, y, "{file} differs");
    }
    let manifest = fs::read_to_string(a.join("manifest.txt")).unwrap();
    for key in ["architecture: cnn-1d", "seed: 7", "k_folds: 2", "batch_size: 4", "snr_db: none"] {
        assert!(manifest.lines().any(|l| l == key), "missing {key}");
    }
}

#[test]
fn evaluate_scores_a_trained_model_and_rejects_mismatched_lengths() {
    let dir = scratch("eval");
    let data = generate(&dir, "d.pqds", &[]);
    let run = dir.join("run");
    assert!(train(&data, &run).status.success());
    let model = run.join("model.pqnn");

    let metrics = dir.join("metrics");
    let o = pqcnn(&["evaluate", "--model", s(&model), "--data", s(&data), "--snr-db", "80", "--out", s(&metrics)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(metrics.join("metrics.csv")).unwrap();
    assert!(csv.starts_with("architecture,records,noise_snr_db,accuracy,loss\ncnn-1d,12,80,"));
    let confusion = fs::read_to_string(metrics.join("confusion.csv")).unwrap();
    assert_eq!(confusion.lines().count(), 7);

    let short = generate(&dir, "short.pqds", &["--duration", "0.1"]);
    let bad = dir.join("bad");
    let o = pqcnn(&["evaluate", "--model", s(&model), "--data", s(&short), "--out", s(&bad)]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("shape mismatch"));
    assert!(!bad.exists());
    let leftovers: Vec<_> = fs::read_dir(&dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n.starts_with('.'))
        .collect();
    assert!(leftovers.is_empty(), "{leftovers:?}");
}

#[test]
fn report_needs_bundles_and_prints_one_row_per_architecture() {
    let dir = scratch("report");
    let empty = dir.join("empty");
    fs::create_dir_all(&empty).unwrap();
    let o = pqcnn(&["report", "--dir", s(&empty)]);
    assert!(!o.status.success());

    let data = generate(&dir, "d.pqds", &[]);
    let runs = dir.join("runs");
    assert!(train(&data, &runs.join("cnn-1d")).status.success());
    let o = pqcnn(&["report", "--dir", s(&runs)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let table = String::from_utf8(o.stdout).unwrap();
    let rows: Vec<&str> = table.lines().filter(|l| l.starts_with("CNN-")).collect();
    assert_eq!(rows.len(), 1, "{table}");
    assert!(rows[0].contains("400x1"));
}
