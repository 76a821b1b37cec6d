mod config;
mod error;
mod output;
mod run;
mod sweep;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use recbound::exec::Execution;
use recbound::selftest::run_selftest;

use crate::config::{read_value, ExperimentConfig, OutputConfig};
use crate::error::CliError;
use crate::run::{run, Settings};

#[derive(Parser, Debug)]
#[command(name = "recbound", version, about = "Boundedness certificates for x(n+1) = A x(n) + y(n)")]
struct Cli {
    /// Worker threads for sweeps and parallel reductions.
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    /// Overrides the configured horizon N.
    #[arg(long, global = true)]
    horizon: Option<u64>,
    /// Overrides the configured tolerance.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Directory for reports and CSV files.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Runs the analysis described by a config file.
    Analyze { config: PathBuf },
    /// Runs the analysis once per point of the config's [sweep] grid.
    Sweep { config: PathBuf },
    /// Runs the exact identity suites and oracle spot checks.
    Selftest {
        #[arg(long, hide = true)]
        mutate_lemma: bool,
    },
}

fn settings(cli: &Cli, config: &Path) -> Settings {
    Settings {
        horizon: cli.horizon,
        tol: cli.tol,
        exec: Execution::Parallel,
        base: config
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from(".")),
    }
}

fn analyze(cli: &Cli, path: &Path) -> Result<(), CliError> {
    let cfg = ExperimentConfig::from_value(read_value(path)?)?;
    if cfg.sweep.is_some() {
        return Err(CliError::Config(
            "this config declares a [sweep] grid; run it with `recbound sweep`".into(),
        ));
    }
    let outcome = run(&cfg, &settings(cli, path))?;
    let mut files = vec![(cfg.output.report.as_str(), output::report_text(&outcome.report)?)];
    if let Some(name) = &cfg.output.samples {
        files.push((name.as_str(), output::samples_csv(&outcome.samples)?));
    }
    output::write_all(&cli.out, &files)?;
    let r = &outcome.report;
    println!(
        "{}: {} ({}) at horizon {}",
        r.kind, r.verdict, r.verdict_class, r.horizon
    );
    Ok(())
}

fn run_sweep(cli: &Cli, path: &Path) -> Result<(), CliError> {
    let mut value = read_value(path)?;
    let points = sweep::grid(&mut value)?;
    let aggregate = match value.get("output") {
        Some(o) => o
            .clone()
            .try_into::<OutputConfig>()
            .map_err(|e| CliError::Config(format!("[output]: {}", e.message())))?
            .aggregate,
        None => OutputConfig::default().aggregate,
    };
    let results = sweep::run_sweep(&value, &points, &settings(cli, path));
    let csv = sweep::aggregate_csv(&results)?;
    let succeeded = results.iter().filter(|r| r.exit_code == 0).count();
    if succeeded == 0 {
        let first = &results[0];
        return Err(match first.exit_code {
            2 => CliError::Config(first.error.clone()),
            3 => CliError::Numeric(first.error.clone()),
            4 => CliError::Refused(first.error.clone()),
            _ => CliError::Output(first.error.clone()),
        });
    }
    output::write_all(&cli.out, &[(aggregate.as_str(), csv)])?;
    println!("sweep: {succeeded} of {} points succeeded", results.len());
    Ok(())
}

fn execute(cli: &Cli) -> Result<u8, CliError> {
    match &cli.command {
        Command::Analyze { config } => analyze(cli, config).map(|_| 0),
        Command::Sweep { config } => run_sweep(cli, config).map(|_| 0),
        Command::Selftest { mutate_lemma } => {
            let report = run_selftest(*mutate_lemma);
            print!("{}", report.table());
            Ok(if report.passed() { 0 } else { 1 })
        }
    }
}

#[cfg(feature = "parallel")]
fn with_jobs(jobs: usize, f: impl FnOnce() -> Result<u8, CliError> + Send) -> Result<u8, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Config(format!("--jobs {jobs}: {e}")))?;
    pool.install(f)
}

#[cfg(not(feature = "parallel"))]
fn with_jobs(_jobs: usize, f: impl FnOnce() -> Result<u8, CliError> + Send) -> Result<u8, CliError> {
    f()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match with_jobs(cli.jobs, || execute(&cli)) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("recbound: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
