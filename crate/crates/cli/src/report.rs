//! Comparison tables over training bundles.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use pqcore::nn::Architecture;

#[derive(Debug, Clone, PartialEq)]
pub struct BundleSummary {
    pub architecture: Architecture,
    pub structure: String,
    pub noise_snr_db: Option<f64>,
    pub mean_val_acc: f64,
}

/// Splits one CSV line, honouring double-quoted fields.
fn split_csv(line: &str) -> Vec<String> {
    let mut fields = Vec::new();
    let mut cur = String::new();
    let mut quoted = false;
    let mut chars = line.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '"' if quoted && chars.peek() == Some(&'"') => {
                cur.push('"');
                chars.next();
            }
            '"' => quoted = !quoted,
            ',' if !quoted => fields.push(std::mem::take(&mut cur)),
            _ => cur.push(c),
        }
    }
    fields.push(cur);
    fields
}

pub fn parse_summary(text: &str) -> Result<BundleSummary> {
    let mut lines = text.lines();
    let header = split_csv(lines.next().context("empty summary")?);
    let row = split_csv(lines.next().context("summary has no data row")?);
    let field = |name: &str| -> Result<&str> {
        let i = header
            .iter()
            .position(|h| h == name)
            .with_context(|| format!("summary lacks column `{name}`"))?;
        row.get(i).map(String::as_str).with_context(|| format!("summary row lacks `{name}`"))
    };
    let snr = field("noise_snr_db")?;
    Ok(BundleSummary {
        architecture: field("architecture")?.parse()?,
        structure: field("structure")?.to_string(),
        noise_snr_db: if snr.is_empty() { None } else { Some(snr.parse()?) },
        mean_val_acc: field("mean_val_acc")?.parse()?,
    })
}

/// Bundle directories under `root`: `root` itself if it holds a
/// `summary.csv`, plus every immediate subdirectory that does.
pub fn find_bundles(root: &Path) -> Result<Vec<PathBuf>> {
    let mut found = Vec::new();
    if root.join("summary.csv").is_file() {
        found.push(root.to_path_buf());
    }
    if root.is_dir() {
        let mut subdirs: Vec<PathBuf> = fs::read_dir(root)
            .with_context(|| format!("cannot read {}", root.display()))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.join("summary.csv").is_file())
            .collect();
        subdirs.sort();
        found.extend(subdirs);
    } else {
        bail!("{} is not a directory", root.display());
    }
    if found.is_empty() {
        bail!("no training bundles (summary.csv) found under {}", root.display());
    }
    Ok(found)
}

pub fn load_summaries(paths: &[PathBuf]) -> Result<Vec<BundleSummary>> {
    paths
        .iter()
        .map(|p| {
            let file = p.join("summary.csv");
            let text = fs::read_to_string(&file)
                .with_context(|| format!("cannot read {}", file.display()))?;
            parse_summary(&text).with_context(|| format!("in {}", file.display()))
        })
        .collect()
}

/// Fixed-width table with one row per architecture: structure, clean and
/// noisy accuracy (percent). When several bundles share a cell the last one
/// wins.
pub fn render_table(summaries: &[BundleSummary]) -> String {
    let mut rows: Vec<(Architecture, String, Option<f64>, Option<f64>)> = Vec::new();
    for arch in Architecture::ALL {
        let mine: Vec<&BundleSummary> = summaries.iter().filter(|s| s.architecture == arch).collect();
        if mine.is_empty() {
            continue;
        }
        let clean = mine.iter().rfind(|s| s.noise_snr_db.is_none()).map(|s| s.mean_val_acc);
        let noisy = mine.iter().rfind(|s| s.noise_snr_db.is_some()).map(|s| s.mean_val_acc);
        rows.push((arch, mine[0].structure.clone(), clean, noisy));
    }
    let pct = |v: Option<f64>| v.map(|a| format!("{:.2}", a * 100.0)).unwrap_or_else(|| "-".into());
    let sw = rows.iter().map(|r| r.1.len()).max().unwrap_or(0).max("Structure".len());
    let mut out = format!("{:<8}  {:<sw$}  {:>8}  {:>8}\n", "Network", "Structure", "Original", "Noisy");
    out.push_str(&format!("{}\n", "-".repeat(8 + 2 + sw + 2 + 8 + 2 + 8)));
    for (arch, structure, clean, noisy) in rows {
        out.push_str(&format!(
            "{:<8}  {:<sw$}  {:>8}  {:>8}\n",
            format!("CNN-{}", &arch.name()[4..]),
            structure,
            pct(clean),
            pct(noisy)
        ));
    }
    out
}
