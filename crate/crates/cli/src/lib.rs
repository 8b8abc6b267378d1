//! Configuration, reporting and sweep drivers behind the `fedsim` binary.

pub mod compare;
pub mod config;
pub mod error;
pub mod report;

pub use compare::{run_compare, write_compare, CompareReport, CompareRun};
pub use config::{config_to_toml, parse_config, parse_config_str, Overrides};
pub use error::{CliError, Result};
pub use report::{write_metrics, RunManifest, WriteOptions, CSV_HEADER};
