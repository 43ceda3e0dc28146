//! Command-line front end: predictability screening, full experiment
//! runs, and post-run summaries, all driven by one TOML config.
//!
//! Exit codes: 0 success, 1 configuration or I/O failure, 2 when the run
//! finished but one or more grid cells failed.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use loadcast::experiment::{load_config, prepare, run, summarize, CellStatus};
use loadcast::ingest::{load_csv, parse_schema_file};
use loadcast::predictability::{predictability_report, WpeParams};

#[derive(Parser)]
#[command(name = "loadcast", version, about = "Appliance-level 24h load forecasting")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Weighted-permutation-entropy screening of the load channels.
    Predictability(PredictabilityArgs),
    /// Run the full (model x feature group) experiment grid.
    Run(ConfigArgs),
    /// Summarize a finished run directory (deltas vs the `none` baseline).
    Summarize(ConfigArgs),
}

#[derive(Args)]
struct ConfigArgs {
    /// Experiment TOML; relative paths inside resolve against its parent.
    #[arg(long)]
    config: PathBuf,
}

#[derive(Args)]
struct PredictabilityArgs {
    /// Experiment TOML (uses its data and predictability sections).
    #[arg(long, conflicts_with_all = ["input", "schema"])]
    config: Option<PathBuf>,
    /// Hourly CSV, first column `timestamp`.
    #[arg(long, requires = "schema")]
    input: Option<PathBuf>,
    /// Channel schema file (`name = role` lines).
    #[arg(long)]
    schema: Option<PathBuf>,
    /// Embedding order m.
    #[arg(long, default_value_t = 7)]
    order: usize,
    #[arg(long, default_value_t = 1)]
    delay: usize,
    /// Report entropies divided by ln(m!).
    #[arg(long)]
    normalize: bool,
    /// Write the report CSV here instead of stdout only.
    #[arg(long)]
    output: Option<PathBuf>,
}

fn config_base(config: &std::path::Path) -> PathBuf {
    config.parent().map(PathBuf::from).unwrap_or_else(|| PathBuf::from("."))
}

fn predictability_cmd(args: &PredictabilityArgs) -> loadcast::Result<()> {
    let report = match (&args.config, &args.input, &args.schema) {
        (Some(cfg_path), _, _) => {
            let cfg = load_config(cfg_path)?;
            prepare(&cfg, &config_base(cfg_path))?.predictability
        }
        (None, Some(input), Some(schema)) => {
            let schema = parse_schema_file(schema)?;
            let frame = load_csv(input, &schema)?;
            let params = WpeParams {
                order: args.order,
                delay: args.delay,
                normalize: args.normalize,
            };
            predictability_report(&frame, &params)?
        }
        _ => {
            return Err(loadcast::Error::InvalidConfig(
                "pass either --config or both --input and --schema".into(),
            ))
        }
    };
    println!("channel,wpe,wpe_normalized,n_patterns,n_windows");
    for r in &report.rows {
        println!(
            "{},{},{},{},{}",
            r.channel, r.wpe, r.wpe_normalized, r.n_patterns, r.n_windows
        );
    }
    if let Some(path) = &args.output {
        report.write_csv(path)?;
    }
    Ok(())
}

fn run_cmd(args: &ConfigArgs) -> loadcast::Result<bool> {
    let cfg = load_config(&args.config)?;
    let report = run(&cfg, &config_base(&args.config))?;
    for r in &report.records {
        match &r.status {
            CellStatus::Ok => {
                let row = r.row.as_ref().unwrap();
                println!(
                    "{:>7} x {:<14} rmse={:<10.4} nrmse={:<8} mase={:<8} ({:.1}s)",
                    r.model.name(),
                    r.group.name(),
                    row.rmse,
                    row.nrmse.map(|v| format!("{v:.4}")).unwrap_or_else(|| "n/a".into()),
                    row.mase.map(|v| format!("{v:.4}")).unwrap_or_else(|| "n/a".into()),
                    row.train_seconds
                );
            }
            CellStatus::Failed(e) => {
                eprintln!("{:>7} x {:<14} FAILED: {e}", r.model.name(), r.group.name());
            }
        }
    }
    println!(
        "wrote {} ({} cells, {} failed, config {})",
        report.out_dir.display(),
        report.records.len(),
        report.n_failed(),
        &report.config_hash[..12]
    );
    Ok(report.n_failed() == 0)
}

fn summarize_cmd(args: &ConfigArgs) -> loadcast::Result<()> {
    let cfg = load_config(&args.config)?;
    let out_dir = {
        let d = &cfg.output.dir;
        if d.is_absolute() {
            d.clone()
        } else {
            config_base(&args.config).join(d)
        }
    };
    let rows = summarize(&out_dir, &cfg.data.target)?;
    println!("model,feature_group,nrmse,improvement_vs_none,mase");
    for r in &rows {
        let fmt = |v: Option<f64>| v.map(|x| format!("{x:.4}")).unwrap_or_else(|| "n/a".into());
        println!(
            "{},{},{},{},{}",
            r.model,
            r.feature_group,
            fmt(r.nrmse),
            fmt(r.improvement),
            fmt(r.mase)
        );
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Predictability(args) => predictability_cmd(args).map(|()| true),
        Command::Run(args) => run_cmd(args),
        Command::Summarize(args) => summarize_cmd(args).map(|()| true),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
