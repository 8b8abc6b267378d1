//! Strategy-by-alpha sweeps and their summary tables.

use std::fs;
use std::path::{Path, PathBuf};

use fedsim_core::orchestrator::{run_experiment, ExperimentConfig, RoundMetrics, Strategy};

use crate::error::{CliError, Result};
use crate::report::{format_float, write_metrics, RunManifest, WriteOptions};

/// Column order of the ablation table.
pub const ABLATION_ORDER: [Strategy; 3] =
    [Strategy::FedcompassNoClustering, Strategy::FedcompassNoCircular, Strategy::Fedcompass];

#[derive(Debug, Clone)]
pub struct CompareRun {
    pub config: ExperimentConfig,
    pub metrics: Vec<RoundMetrics>,
}

impl CompareRun {
    pub fn final_accuracy(&self) -> f64 {
        self.metrics.last().map(|m| m.accuracy).unwrap_or(f64::NAN)
    }
}

#[derive(Debug, Clone)]
pub struct CompareReport {
    pub strategies: Vec<Strategy>,
    pub alphas: Vec<f64>,
    /// Row-major by strategy, then alpha.
    pub runs: Vec<CompareRun>,
}

impl CompareReport {
    pub fn run(&self, strategy: Strategy, alpha_index: usize) -> &CompareRun {
        let s = self.strategies.iter().position(|&x| x == strategy).expect("strategy in report");
        &self.runs[s * self.alphas.len() + alpha_index]
    }

    /// Final-round accuracy, rows = strategies, columns = alphas.
    pub fn accuracy_table(&self) -> Vec<Vec<f64>> {
        self.strategies
            .iter()
            .map(|&s| (0..self.alphas.len()).map(|a| self.run(s, a).final_accuracy()).collect())
            .collect()
    }

    /// Ablation columns present in this sweep, in table order.
    pub fn ablation_columns(&self) -> Vec<Strategy> {
        let has_ablation = self
            .strategies
            .iter()
            .any(|s| matches!(s, Strategy::FedcompassNoClustering | Strategy::FedcompassNoCircular));
        if !has_ablation {
            return Vec::new();
        }
        ABLATION_ORDER.into_iter().filter(|s| self.strategies.contains(s)).collect()
    }

    pub fn accuracy_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["strategy".to_string()];
        header.extend(self.alphas.iter().map(|a| format!("alpha={a}")));
        w.write_record(&header)?;
        for (s, row) in self.strategies.iter().zip(self.accuracy_table()) {
            let mut rec = vec![s.to_string()];
            rec.extend(row.into_iter().map(format_float));
            w.write_record(&rec)?;
        }
        into_string(w)
    }

    /// Per-round accuracy of the ablation variants, or `None` when the sweep has none.
    pub fn ablation_csv(&self) -> Result<Option<String>> {
        let cols = self.ablation_columns();
        if cols.is_empty() {
            return Ok(None);
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["alpha".to_string(), "round".to_string()];
        header.extend(cols.iter().map(|s| s.to_string()));
        w.write_record(&header)?;
        for a in 0..self.alphas.len() {
            let rows = cols.iter().map(|&s| self.run(s, a).metrics.len()).min().unwrap_or(0);
            for r in 0..rows {
                let mut rec = vec![format_float(self.alphas[a]), r.to_string()];
                rec.extend(cols.iter().map(|&s| format_float(self.run(s, a).metrics[r].accuracy)));
                w.write_record(&rec)?;
            }
        }
        into_string(w).map(Some)
    }
}

fn into_string(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Runs every strategy at every alpha with the shared settings and seed.
pub fn run_compare(base: &ExperimentConfig, strategies: &[Strategy], alphas: &[f64]) -> Result<CompareReport> {
    if strategies.is_empty() {
        return Err(CliError::config("strategies", "at least one strategy is required"));
    }
    if alphas.is_empty() {
        return Err(CliError::config("alphas", "at least one alpha is required"));
    }
    for (i, s) in strategies.iter().enumerate() {
        if strategies[..i].contains(s) {
            return Err(CliError::config("strategies", format!("{s} listed twice")));
        }
    }
    let mut runs = Vec::with_capacity(strategies.len() * alphas.len());
    for &strategy in strategies {
        for &alpha in alphas {
            let config = ExperimentConfig { strategy, alpha, ..base.clone() };
            config.validate().map_err(|(key, msg)| CliError::config(key, msg))?;
            let metrics = run_experiment(&config)?;
            runs.push(CompareRun { config, metrics });
        }
    }
    Ok(CompareReport { strategies: strategies.to_vec(), alphas: alphas.to_vec(), runs })
}

pub fn run_file_name(strategy: Strategy, alpha: f64) -> String {
    format!("{strategy}_alpha{alpha}.csv")
}

/// Writes per-run metrics, `accuracy_table.csv`, `ablation_table.csv` when
/// applicable and `compare.manifest.json` into `dir`.
pub fn write_compare(report: &CompareReport, dir: &Path, opts: WriteOptions) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut outputs = Vec::new();
    for run in &report.runs {
        let path = dir.join(run_file_name(run.config.strategy, run.config.alpha));
        outputs.extend(write_metrics(&run.metrics, &run.config, &path, opts)?);
    }
    let table = dir.join("accuracy_table.csv");
    fs::write(&table, report.accuracy_csv()?)?;
    outputs.push(table);
    if let Some(text) = report.ablation_csv()? {
        let path = dir.join("ablation_table.csv");
        fs::write(&path, text)?;
        outputs.push(path);
    }
    let manifest = dir.join("compare.manifest.json");
    outputs.push(manifest.clone());
    RunManifest::new(
        report.runs.iter().map(|r| r.config.clone()).collect(),
        outputs.iter().map(|p| p.display().to_string()).collect(),
    )
    .write(&manifest)?;
    Ok(outputs)
}
