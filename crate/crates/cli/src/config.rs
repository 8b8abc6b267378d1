//! Flat TOML configuration with flag overrides.
//!
//! Resolution order is defaults, then the file, then command-line flags.

use std::path::Path;

use clap::Args;
use fedsim_core::orchestrator::{DatasetSource, ExperimentConfig, Strategy};
use toml::{Table, Value};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Int,
    Float,
    Str,
    IntList,
}

impl Kind {
    fn describe(self) -> &'static str {
        match self {
            Kind::Int => "a non-negative integer",
            Kind::Float => "a number",
            Kind::Str => "a string",
            Kind::IntList => "an array of non-negative integers",
        }
    }
}

const KEYS: &[(&str, Kind)] = &[
    ("strategy", Kind::Str),
    ("clients", Kind::Int),
    ("alpha", Kind::Float),
    ("rounds", Kind::Int),
    ("epochs", Kind::Int),
    ("batch", Kind::Int),
    ("lr", Kind::Float),
    ("server_lr", Kind::Float),
    ("server_beta1", Kind::Float),
    ("server_beta2", Kind::Float),
    ("server_eps", Kind::Float),
    ("lambda1", Kind::Float),
    ("lambda2", Kind::Float),
    ("clusters", Kind::Int),
    ("prox_mu", Kind::Float),
    ("features", Kind::Int),
    ("hidden", Kind::Int),
    ("qubits", Kind::Int),
    ("layers", Kind::Int),
    ("classes", Kind::IntList),
    ("dataset", Kind::Str),
    ("per_class", Kind::Int),
    ("spread", Kind::Float),
    ("idx_images", Kind::Str),
    ("idx_labels", Kind::Str),
    ("seed", Kind::Int),
    ("workers", Kind::Int),
];

/// Command-line overrides; every field left unset keeps the file or default value.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    #[arg(long)]
    pub strategy: Option<Strategy>,
    #[arg(long)]
    pub dataset: Option<DatasetSource>,
    #[arg(long)]
    pub idx_images: Option<String>,
    #[arg(long)]
    pub idx_labels: Option<String>,
    /// Comma-separated class ids to keep, e.g. 0,1,2,3
    #[arg(long, value_delimiter = ',')]
    pub classes: Option<Vec<usize>>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub clients: Option<usize>,
    #[arg(long)]
    pub rounds: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub server_lr: Option<f64>,
    #[arg(long)]
    pub clusters: Option<usize>,
    #[arg(long)]
    pub lambda1: Option<f64>,
    #[arg(long)]
    pub lambda2: Option<f64>,
    #[arg(long)]
    pub prox_mu: Option<f64>,
    #[arg(long)]
    pub qubits: Option<usize>,
    #[arg(long)]
    pub layers: Option<usize>,
    #[arg(long)]
    pub hidden: Option<usize>,
    #[arg(long)]
    pub features: Option<usize>,
    #[arg(long)]
    pub per_class: Option<usize>,
    #[arg(long)]
    pub spread: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads for local training (0 = all cores)
    #[arg(long)]
    pub workers: Option<usize>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut ExperimentConfig) {
        macro_rules! set {
            ($($field:ident),*) => {
                $(if let Some(v) = &self.$field { cfg.$field = v.clone(); })*
            };
        }
        set!(
            strategy, dataset, classes, alpha, clients, rounds, epochs, batch, lr, server_lr, clusters, lambda1,
            lambda2, prox_mu, qubits, layers, hidden, features, per_class, spread, seed, workers
        );
        if let Some(v) = &self.idx_images {
            cfg.idx_images = Some(v.clone());
        }
        if let Some(v) = &self.idx_labels {
            cfg.idx_labels = Some(v.clone());
        }
    }
}

fn check_kind(key: &str, kind: Kind, value: &Value) -> Result<Value> {
    let mismatch = || CliError::config(key, format!("expected {}, found {}", kind.describe(), value.type_str()));
    let non_negative = |v: &Value| matches!(v, Value::Integer(i) if *i >= 0);
    match (kind, value) {
        (Kind::Int, v) if non_negative(v) => Ok(v.clone()),
        (Kind::Float, Value::Float(_)) => Ok(value.clone()),
        (Kind::Float, Value::Integer(i)) => Ok(Value::Float(*i as f64)),
        (Kind::Str, Value::String(_)) => Ok(value.clone()),
        (Kind::IntList, Value::Array(items)) if items.iter().all(non_negative) => Ok(value.clone()),
        _ => Err(mismatch()),
    }
}

/// Parses the text of a config file on top of the defaults.
pub fn parse_config_str(text: &str) -> Result<ExperimentConfig> {
    let file: Table = text.parse().map_err(|e: toml::de::Error| CliError::ConfigSyntax(e.to_string()))?;
    let mut merged = Table::try_from(ExperimentConfig::default()).map_err(|e| CliError::Other(e.to_string()))?;
    for (key, value) in &file {
        let Some(&(_, kind)) = KEYS.iter().find(|(k, _)| k == key) else {
            return Err(CliError::config(key.as_str(), "unknown key"));
        };
        merged.insert(key.clone(), check_kind(key, kind, value)?);
    }
    merged.try_into().map_err(|e: toml::de::Error| {
        let key = file.keys().find(|k| e.message().contains(k.as_str())).cloned();
        let key = key
            .or_else(|| ["strategy", "dataset"].iter().find(|k| file.contains_key(**k)).map(|k| k.to_string()))
            .unwrap_or_else(|| "<file>".into());
        CliError::config(key, e.message().to_string())
    })
}

/// Resolves defaults, optional file and flags into a validated config.
pub fn parse_config(file: Option<&Path>, overrides: &Overrides) -> Result<ExperimentConfig> {
    let mut cfg = match file {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Io(format!("cannot read config {}: {e}", path.display())))?;
            parse_config_str(&text)?
        }
        None => ExperimentConfig::default(),
    };
    overrides.apply(&mut cfg);
    cfg.validate().map_err(|(key, msg)| CliError::config(key, msg))?;
    Ok(cfg)
}

/// Serializes a config as a flat TOML document that `parse_config_str` reads back.
pub fn config_to_toml(cfg: &ExperimentConfig) -> Result<String> {
    if cfg.seed > i64::MAX as u64 {
        return Err(CliError::config("seed", "values above 2^63 - 1 cannot be written to a config file"));
    }
    toml::to_string(cfg).map_err(|e| CliError::Other(e.to_string()))
}
