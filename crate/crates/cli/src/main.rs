use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fedsim_core::orchestrator::{ExperimentConfig, Simulation, Strategy};
use fedsim_cli::compare::{run_compare, run_file_name, write_compare};
use fedsim_cli::config::{parse_config, Overrides};
use fedsim_cli::report::{format_float, write_metrics, WriteOptions};
use fedsim_cli::{CliError, Result};

#[derive(Parser)]
#[command(name = "fedsim", version, about = "Federated hybrid quantum-classical learning simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single experiment and write its per-round metrics.
    Run(RunArgs),
    /// Sweep several strategies over one or more alpha values.
    Compare(CompareArgs),
    /// Print the Laplacian spectrum of the configured partition.
    Eigengap(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Flat TOML config file
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory
    #[arg(long, env = "FEDSIM_OUT_DIR", default_value = "results")]
    out: PathBuf,
    #[command(flatten)]
    overrides: Overrides,
}

impl CommonArgs {
    fn resolve(&self) -> Result<ExperimentConfig> {
        parse_config(self.config.as_deref(), &self.overrides)
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Record wall-clock durations in the CSV
    #[arg(long)]
    timing: bool,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Comma-separated strategies (default: all)
    #[arg(long, value_delimiter = ',')]
    strategies: Option<Vec<Strategy>>,
    /// Comma-separated alpha values (default: the configured alpha)
    #[arg(long, value_delimiter = ',')]
    alphas: Option<Vec<f64>>,
    /// Record wall-clock durations in the CSVs
    #[arg(long)]
    timing: bool,
}

fn run(args: &RunArgs) -> Result<()> {
    let config = args.common.resolve()?;
    let metrics = Simulation::new(config.clone())?.run()?;
    for m in &metrics {
        println!("round {:>3}  accuracy {}  loss {}", m.round, format_float(m.accuracy), format_float(m.loss));
    }
    let path = args.common.out.join(run_file_name(config.strategy, config.alpha));
    let written = write_metrics(&metrics, &config, &path, WriteOptions { timing: args.timing })?;
    report_written(&written);
    Ok(())
}

fn compare(args: &CompareArgs) -> Result<()> {
    let base = args.common.resolve()?;
    let strategies = args.strategies.clone().unwrap_or_else(|| Strategy::ALL.to_vec());
    let alphas = args.alphas.clone().unwrap_or_else(|| vec![base.alpha]);
    let report = run_compare(&base, &strategies, &alphas)?;
    print!("{}", report.accuracy_csv()?);
    let written = write_compare(&report, &args.common.out, WriteOptions { timing: args.timing })?;
    report_written(&written);
    Ok(())
}

fn eigengap(args: &CommonArgs) -> Result<()> {
    let config = args.resolve()?;
    let report = Simulation::new(config)?.eigengap()?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["index", "eigenvalue", "gap"])?;
    for (i, value) in report.eigenvalues.iter().enumerate() {
        let gap = report.gaps.get(i).map(|g| format!("{g:.6e}")).unwrap_or_default();
        w.write_record([i.to_string(), format!("{value:.6e}"), gap])?;
    }
    let text = String::from_utf8(w.into_inner().map_err(|e| CliError::Io(e.to_string()))?).expect("utf-8");
    print!("{text}");
    std::fs::create_dir_all(&args.out)?;
    let path = args.out.join("eigengap.csv");
    std::fs::write(&path, text)?;
    report_written(&[path]);
    Ok(())
}

fn report_written(paths: &[impl AsRef<Path>]) {
    for p in paths {
        eprintln!("wrote {}", p.as_ref().display());
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(a) => run(a),
        Command::Compare(a) => compare(a),
        Command::Eigengap(a) => eigengap(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
