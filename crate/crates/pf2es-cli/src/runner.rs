//! Parallel execution of a run list with record files, a progress log and a
//! flat summary CSV.

use std::fs::File;
use std::io::Write;
use std::path::Path;
use std::sync::Mutex;

use anyhow::Context;
use pf2es::bo::{run_bo, BoRunRecord, RunConfig};
use rayon::prelude::*;

use crate::manifest::record_file_name;

pub fn execute_runs(
    runs: &[RunConfig],
    output_dir: &Path,
    workers: usize,
) -> anyhow::Result<Vec<BoRunRecord>> {
    std::fs::create_dir_all(output_dir)
        .with_context(|| format!("creating {}", output_dir.display()))?;
    let log = Mutex::new(
        File::create(output_dir.join("progress.log")).context("creating progress log")?,
    );
    let log_line = |line: String| {
        println!("{line}");
        if let Ok(mut f) = log.lock() {
            let _ = writeln!(f, "{line}");
        }
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .context("building worker pool")?;

    let results: Vec<anyhow::Result<BoRunRecord>> = pool.install(|| {
        runs.par_iter()
            .map(|config| {
                let name = record_file_name(config);
                log_line(format!(
                    "start {} ({} iterations, seed {})",
                    name, config.budget, config.seed
                ));
                let record = run_bo(config).map_err(|e| anyhow::anyhow!("{name}: {e}"))?;
                let path = output_dir.join(&name);
                std::fs::write(&path, record.to_json())
                    .with_context(|| format!("writing {}", path.display()))?;
                match &record.aborted {
                    Some(reason) => log_line(format!("aborted {name}: {reason}")),
                    None => log_line(format!(
                        "done {} in {:.1}s",
                        name, record.timings.total_secs
                    )),
                }
                Ok(record)
            })
            .collect()
    });

    let mut records = Vec::with_capacity(results.len());
    for r in results {
        records.push(r?);
    }
    Ok(records)
}

/// Flat per-run metric rows: problem, acq, q, seed, iteration, metric, value.
pub fn write_summary_csv(records: &[BoRunRecord], path: &Path) -> anyhow::Result<()> {
    let mut rows: Vec<(String, &'static str, usize, u64, usize, &'static str, f64)> = Vec::new();
    for rec in records {
        for (iteration, metric, value) in rec.metric_rows() {
            rows.push((
                rec.config.problem.clone(),
                rec.config.acquisition.as_str(),
                rec.config.q,
                rec.config.seed,
                iteration,
                metric,
                value,
            ));
        }
    }
    rows.sort_by(|a, b| {
        (&a.0, a.1, a.2, a.3, a.4, a.5).cmp(&(&b.0, b.1, b.2, b.3, b.4, b.5))
    });
    let mut out = String::from("problem,acq,q,seed,iteration,metric,value\n");
    for (problem, acq, q, seed, iteration, metric, value) in rows {
        out.push_str(&format!("{problem},{acq},{q},{seed},{iteration},{metric},{value}\n"));
    }
    std::fs::write(path, out).with_context(|| format!("writing {}", path.display()))
}
