use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::atomic::{AtomicU64, Ordering};

use clap::{Args, Parser, Subcommand};
use logit_gof::{
    embedded_finney, emit_report, emit_reports, export_csv, load_config, load_csv, run_experiment_with,
    ExperimentConfig, GofError, Report, ReportFormat, RunOptions,
};

/// Goodness-of-fit tests for logistic regression with Monte-Carlo P-values.
#[derive(Parser)]
#[command(name = "logit-gof", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiments of a config file (or a single default experiment),
    /// with flags overriding config values.
    Run(RunArgs),
    /// Write a dataset (default: the embedded Finney data) as CSV.
    Export(ExportArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML experiment file.
    config: Option<PathBuf>,
    /// CSV file, or "finney" for the embedded data.
    #[arg(long)]
    dataset: Option<String>,
    #[arg(long)]
    dependent: Option<String>,
    /// Comma-separated tested-model covariates ("" for intercept only).
    #[arg(long)]
    tested: Option<String>,
    /// Comma-separated full-model covariates.
    #[arg(long)]
    full: Option<String>,
    /// Number of injected U(0,1) covariates (named u1, u2, ...).
    #[arg(long)]
    inject: Option<usize>,
    #[arg(long)]
    inject_seed: Option<u64>,
    /// Comma-separated statistic tokens, e.g. ks:full,deviance,hl:tested.
    #[arg(long)]
    statistics: Option<String>,
    /// Comma-separated HL group counts.
    #[arg(long)]
    hl_groups: Option<String>,
    /// Number of simulations.
    #[arg(short = 'i', long)]
    simulations: Option<u64>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    /// text, csv or json; defaults to the --output extension, else text.
    #[arg(long)]
    format: Option<String>,
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Report progress on stderr.
    #[arg(long)]
    progress: bool,
}

#[derive(Args)]
struct ExportArgs {
    /// Destination CSV file.
    output: PathBuf,
    /// Source CSV; the embedded Finney data when omitted.
    #[arg(long)]
    dataset: Option<String>,
    #[arg(long, default_value = "y")]
    dependent: String,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Run(args) => run(args),
        Command::Export(args) => export(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn list(s: &str) -> Vec<String> {
    s.split(',').map(str::trim).filter(|t| !t.is_empty()).map(String::from).collect()
}

fn apply_overrides(cfg: &mut ExperimentConfig, a: &RunArgs) -> Result<(), GofError> {
    if let Some(v) = &a.dataset {
        cfg.dataset = v.clone();
    }
    if let Some(v) = &a.dependent {
        cfg.dependent = v.clone();
    }
    if let Some(v) = &a.tested {
        cfg.tested = Some(list(v));
    }
    if let Some(v) = &a.full {
        cfg.full = Some(list(v));
    }
    if let Some(v) = a.inject {
        cfg.inject_uniform = v;
    }
    if let Some(v) = a.inject_seed {
        cfg.inject_seed = v;
    }
    if let Some(v) = &a.statistics {
        cfg.statistics = Some(list(v));
    }
    if let Some(v) = &a.hl_groups {
        cfg.hl_groups = list(v)
            .iter()
            .map(|g| g.parse().map_err(|_| GofError::Config(format!("bad HL group count {g:?}"))))
            .collect::<Result<_, _>>()?;
    }
    if let Some(v) = a.simulations {
        cfg.num_simulations = v;
    }
    if let Some(v) = a.seed {
        cfg.master_seed = v;
    }
    if let Some(v) = a.workers {
        cfg.workers = Some(v);
    }
    cfg.check()
}

fn run(a: RunArgs) -> Result<(), GofError> {
    let mut cfgs = match &a.config {
        Some(path) => load_config(path)?,
        None => vec![ExperimentConfig::default()],
    };
    for cfg in &mut cfgs {
        apply_overrides(cfg, &a)?;
    }
    let format = match (&a.format, &a.output) {
        (Some(f), _) => f.parse()?,
        (None, Some(p)) => match p.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("json") => ReportFormat::Json,
            Some(ext) if ext.eq_ignore_ascii_case("csv") => ReportFormat::Csv,
            _ => ReportFormat::Text,
        },
        (None, None) => ReportFormat::Text,
    };

    let mut reports: Vec<Report> = Vec::with_capacity(cfgs.len());
    let count = cfgs.len();
    for (idx, cfg) in cfgs.iter().enumerate() {
        let last = AtomicU64::new(0);
        let progress = |done: u64, total: u64| {
            // roughly every 5%
            let step = (total / 20).max(1);
            if done / step > last.load(Ordering::Relaxed) / step || done == total {
                last.store(done, Ordering::Relaxed);
                eprint!("\rexperiment {}/{}: {done}/{total} simulations", idx + 1, count);
                if done == total {
                    eprintln!();
                }
            }
        };
        let opts = RunOptions {
            progress: if a.progress { Some(&progress) } else { None },
            ..Default::default()
        };
        reports.push(run_experiment_with(cfg, &opts)?);
    }

    let bytes = if reports.len() == 1 {
        emit_report(&reports[0], format)?
    } else {
        emit_reports(&reports, format)?
    };
    match &a.output {
        Some(path) => std::fs::write(path, bytes)?,
        None => std::io::stdout().write_all(&bytes)?,
    }
    Ok(())
}

fn export(a: ExportArgs) -> Result<(), GofError> {
    let d = match a.dataset.as_deref() {
        None | Some("finney") => embedded_finney::<f64>(),
        Some(path) => load_csv(path, &a.dependent)?,
    };
    export_csv(&d, &a.dependent, &a.output)
}
