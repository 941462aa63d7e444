//! Experiment front end: run manifests, aggregate records, sweep
//! hyperparameters, list registered problems.

mod aggregate;
mod manifest;
mod runner;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "pf2es", about = "Multi-objective Bayesian optimization experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute every run in a manifest, writing one JSON record per run plus
    /// a summary CSV and progress log.
    Run {
        /// Manifest file (TOML)
        manifest: PathBuf,
        /// Override the manifest's output directory
        #[arg(long)]
        output_dir: Option<PathBuf>,
        /// Override the manifest's worker count
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Aggregate record files into percentile curves (CSV) and one SVG per
    /// problem.
    Aggregate {
        /// Directory holding *.json run records
        records_dir: PathBuf,
        /// Output directory (defaults to the records directory)
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Clone a base manifest across a parameter grid and run everything.
    Sweep {
        /// Swept parameter: c (epsilon proportion) or n_mc
        #[arg(long)]
        parameter: String,
        /// Comma-separated values, e.g. 0.0,0.03,0.04,0.05
        #[arg(long)]
        values: String,
        /// Base manifest (TOML)
        #[arg(long)]
        base: PathBuf,
        /// Output directory override
        #[arg(long)]
        output_dir: Option<PathBuf>,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Print the registered benchmark problems as JSON.
    ListProblems,
}

#[derive(Debug)]
enum CliError {
    Config(String),
    Runtime(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Runtime(m) => write!(f, "runtime failure: {m}"),
        }
    }
}

fn cmd_run(
    manifest_path: &PathBuf,
    output_dir: Option<PathBuf>,
    workers: Option<usize>,
) -> Result<(), CliError> {
    let manifest =
        manifest::parse_manifest(manifest_path).map_err(|e| CliError::Config(format!("{e:#}")))?;
    let out = output_dir.unwrap_or_else(|| PathBuf::from(&manifest.output_dir));
    let workers = workers.unwrap_or(manifest.workers);
    let records = runner::execute_runs(&manifest.runs, &out, workers)
        .map_err(|e| CliError::Runtime(format!("{e:#}")))?;
    runner::write_summary_csv(&records, &out.join("summary.csv"))
        .map_err(|e| CliError::Runtime(format!("{e:#}")))?;
    println!("{} runs -> {}", records.len(), out.display());
    Ok(())
}

fn cmd_aggregate(records_dir: &PathBuf, output_dir: Option<PathBuf>) -> Result<(), CliError> {
    let out = output_dir.unwrap_or_else(|| records_dir.clone());
    std::fs::create_dir_all(&out).map_err(|e| CliError::Runtime(e.to_string()))?;
    let records =
        aggregate::load_records(records_dir).map_err(|e| CliError::Config(format!("{e:#}")))?;
    let series = aggregate::aggregate(&records);
    aggregate::write_aggregate_csv(&series, &out.join("aggregate.csv"))
        .map_err(|e| CliError::Runtime(format!("{e:#}")))?;
    let svgs =
        aggregate::write_svgs(&series, &out).map_err(|e| CliError::Runtime(format!("{e:#}")))?;
    println!("aggregate.csv + {} plots -> {}", svgs.len(), out.display());
    Ok(())
}

fn cmd_sweep(
    parameter: &str,
    values: &str,
    base: &PathBuf,
    output_dir: Option<PathBuf>,
    workers: Option<usize>,
) -> Result<(), CliError> {
    let manifest = manifest::parse_manifest(base).map_err(|e| CliError::Config(format!("{e:#}")))?;
    let values: Vec<&str> = values.split(',').filter(|v| !v.is_empty()).collect();
    if values.is_empty() {
        return Err(CliError::Config("sweep needs at least one value".into()));
    }

    let mut runs = Vec::new();
    for v in &values {
        for base_run in &manifest.runs {
            let mut run = base_run.clone();
            match parameter {
                "c" => {
                    run.epsilon.c = v
                        .parse::<f64>()
                        .map_err(|_| CliError::Config(format!("bad c value: {v}")))?;
                }
                "n_mc" => {
                    run.n_mc = v
                        .parse::<usize>()
                        .map_err(|_| CliError::Config(format!("bad n_mc value: {v}")))?;
                }
                other => {
                    return Err(CliError::Config(format!(
                        "unknown sweep parameter {other} (supported: c, n_mc)"
                    )));
                }
            }
            run.validate().map_err(|e| CliError::Config(e.to_string()))?;
            runs.push(run);
        }
    }
    // distinct parameter values keep record names unique within a cell only
    // via the seed, so place each value in its own subdirectory
    let out = output_dir.unwrap_or_else(|| PathBuf::from(&manifest.output_dir));
    let workers = workers.unwrap_or(manifest.workers);
    let mut all_records = Vec::new();
    for (vi, v) in values.iter().enumerate() {
        let sub = out.join(format!("{}_{}", parameter.replace("n_mc", "nmc"), v));
        let chunk: Vec<_> = runs
            .iter()
            .skip(vi * manifest.runs.len())
            .take(manifest.runs.len())
            .cloned()
            .collect();
        let records = runner::execute_runs(&chunk, &sub, workers)
            .map_err(|e| CliError::Runtime(format!("{e:#}")))?;
        all_records.extend(records);
    }
    runner::write_summary_csv(&all_records, &out.join("summary.csv"))
        .map_err(|e| CliError::Runtime(format!("{e:#}")))?;
    println!("{} sweep runs -> {}", all_records.len(), out.display());
    Ok(())
}

fn cmd_list_problems() -> Result<(), CliError> {
    let mut entries = Vec::new();
    for name in pf2es::benchmarks::PROBLEM_NAMES {
        let b = pf2es::benchmarks::benchmark(name).map_err(|e| CliError::Runtime(e.to_string()))?;
        entries.push(serde_json::json!({
            "name": name,
            "d": b.spec.dim(),
            "m": b.spec.num_objectives,
            "c": b.spec.num_constraints,
            "regret_ref": b.regret_ref,
            "ideal_hypervolume": b.ideal_hypervolume,
            "calibration_ref": b.calibration_ref,
        }));
    }
    println!("{}", serde_json::to_string_pretty(&entries).unwrap());
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            // help/version requests are not errors
            if e.use_stderr() {
                eprintln!("{e}");
                return ExitCode::from(1);
            }
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    let result = match &cli.command {
        Command::Run { manifest, output_dir, workers } => {
            cmd_run(manifest, output_dir.clone(), *workers)
        }
        Command::Aggregate { records_dir, output_dir } => {
            cmd_aggregate(records_dir, output_dir.clone())
        }
        Command::Sweep { parameter, values, base, output_dir, workers } => {
            cmd_sweep(parameter, values, base, output_dir.clone(), *workers)
        }
        Command::ListProblems => cmd_list_problems(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ CliError::Config(_)) => {
            eprintln!("{e}");
            ExitCode::from(1)
        }
        Err(e @ CliError::Runtime(_)) => {
            eprintln!("{e}");
            ExitCode::from(2)
        }
    }
}
