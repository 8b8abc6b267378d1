//! Metrics CSV, full per-round JSON and the run manifest.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use fedsim_core::orchestrator::{ExperimentConfig, RoundMetrics};
use serde::{Deserialize, Serialize};

use crate::error::Result;

pub const CSV_HEADER: [&str; 10] =
    ["round", "strategy", "seed", "alpha", "accuracy", "loss", "mean_train_loss", "cluster_sizes", "degeneracies", "duration_ms"];

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Output controls shared by every writer.
#[derive(Debug, Clone, Copy, Default)]
pub struct WriteOptions {
    /// Record wall-clock durations. Off by default so reruns are byte-identical.
    pub timing: bool,
}

/// Resolved configs and artifact paths of one invocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
    pub configs: Vec<ExperimentConfig>,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(configs: Vec<ExperimentConfig>, outputs: Vec<String>) -> Self {
        let timestamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        Self { version: ARTIFACT_VERSION.to_string(), timestamp, configs, outputs }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }
}

pub fn format_float(x: f64) -> String {
    format!("{x:.6}")
}

/// One CSV record per round in header order.
pub fn csv_record(m: &RoundMetrics, opts: WriteOptions) -> Vec<String> {
    vec![
        m.round.to_string(),
        m.strategy.to_string(),
        m.seed.to_string(),
        format_float(m.alpha),
        format_float(m.accuracy),
        format_float(m.loss),
        m.mean_train_loss.map(format_float).unwrap_or_default(),
        m.cluster_sizes.iter().map(usize::to_string).collect::<Vec<_>>().join(";"),
        m.degeneracies.to_string(),
        format_float(if opts.timing { m.duration_ms } else { 0.0 }),
    ]
}

pub fn metrics_csv(metrics: &[RoundMetrics], opts: WriteOptions) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER)?;
    for m in metrics {
        w.write_record(csv_record(m, opts))?;
    }
    let bytes = w.into_inner().map_err(|e| crate::error::CliError::Io(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}{suffix}"))
}

/// Writes the CSV plus `<stem>.rounds.json` (full metrics) and `<stem>.manifest.json`.
/// Returns every path written, the CSV first.
pub fn write_metrics(
    metrics: &[RoundMetrics],
    config: &ExperimentConfig,
    path: &Path,
    opts: WriteOptions,
) -> Result<Vec<PathBuf>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, metrics_csv(metrics, opts)?)?;

    let rounds_path = sibling(path, ".rounds.json");
    let full: Vec<RoundMetrics> = metrics
        .iter()
        .map(|m| RoundMetrics { duration_ms: if opts.timing { m.duration_ms } else { 0.0 }, ..m.clone() })
        .collect();
    fs::write(&rounds_path, serde_json::to_string_pretty(&full)? + "\n")?;

    let manifest_path = sibling(path, ".manifest.json");
    let outputs = vec![path.to_path_buf(), rounds_path, manifest_path.clone()];
    RunManifest::new(vec![config.clone()], outputs.iter().map(|p| p.display().to_string()).collect())
        .write(&manifest_path)?;
    Ok(outputs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sibling_replaces_extension() {
        assert_eq!(sibling(Path::new("out/run.csv"), ".manifest.json"), PathBuf::from("out/run.manifest.json"));
    }

    #[test]
    fn floats_have_six_decimals() {
        assert_eq!(format_float(0.5), "0.500000");
        assert_eq!(format_float(1.0 / 3.0), "0.333333");
    }
}
