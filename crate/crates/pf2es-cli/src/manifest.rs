//! Experiment manifest: a TOML file holding shared defaults and a run list.
//!
//! ```toml
//! schema = 1
//! output_dir = "runs"
//! workers = 2
//!
//! [defaults]           # optional; any RunConfig field
//! budget = 40
//!
//! [[runs]]
//! problem = "vlmop2"
//! acquisition = "pf2es"
//! q = 1
//! seeds = [0, 1, 2]    # or `seed = 0`
//! ```

use std::collections::HashSet;
use std::path::Path;

use anyhow::{bail, Context};
use pf2es::bo::RunConfig;
use serde::Deserialize;

pub const MANIFEST_SCHEMA: i64 = 1;

#[derive(Debug, Deserialize)]
struct RawManifest {
    schema: i64,
    #[serde(default = "default_output_dir")]
    output_dir: String,
    #[serde(default = "default_workers")]
    workers: usize,
    #[serde(default)]
    defaults: toml::Table,
    runs: Vec<toml::Table>,
}

fn default_output_dir() -> String {
    "runs".to_string()
}

fn default_workers() -> usize {
    1
}

#[derive(Debug, Clone)]
pub struct Manifest {
    pub output_dir: String,
    pub workers: usize,
    pub runs: Vec<RunConfig>,
}

fn merge_tables(base: &toml::Table, over: &toml::Table) -> toml::Table {
    let mut out = base.clone();
    for (k, v) in over {
        match (out.get_mut(k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => {
                *b = merge_tables(&b.clone(), o);
            }
            _ => {
                out.insert(k.clone(), v.clone());
            }
        }
    }
    out
}

pub fn parse_manifest(path: &Path) -> anyhow::Result<Manifest> {
    let raw = std::fs::read_to_string(path)
        .with_context(|| format!("reading manifest {}", path.display()))?;
    let manifest: RawManifest = toml::from_str(&raw).context("parsing manifest")?;
    if manifest.schema != MANIFEST_SCHEMA {
        bail!("unsupported manifest schema {} (expected {MANIFEST_SCHEMA})", manifest.schema);
    }
    if manifest.runs.is_empty() {
        bail!("manifest has no runs");
    }

    let mut runs = Vec::new();
    for (idx, entry) in manifest.runs.iter().enumerate() {
        let mut table = merge_tables(&manifest.defaults, entry);
        let seeds: Vec<i64> = match (table.remove("seed"), table.remove("seeds")) {
            (Some(toml::Value::Integer(s)), None) => vec![s],
            (None, Some(toml::Value::Array(arr))) => arr
                .iter()
                .map(|v| v.as_integer().context("seeds must be integers"))
                .collect::<anyhow::Result<Vec<_>>>()?,
            (None, None) => bail!("run {idx}: missing seed / seeds"),
            _ => bail!("run {idx}: seed must be an integer, seeds an integer array"),
        };
        for seed in seeds {
            let mut t = table.clone();
            t.insert("seed".into(), toml::Value::Integer(seed));
            let config: RunConfig = toml::Value::Table(t)
                .try_into()
                .with_context(|| format!("run {idx} (seed {seed})"))?;
            config
                .validate()
                .map_err(|e| anyhow::anyhow!("run {idx} (seed {seed}): {e}"))?;
            runs.push(config);
        }
    }

    // seeds must be unique per (problem, acquisition, q) cell
    let mut seen = HashSet::new();
    for r in &runs {
        let key = (r.problem.clone(), r.acquisition.as_str(), r.q, r.seed);
        if !seen.insert(key) {
            bail!(
                "duplicate seed {} for ({}, {}, q={})",
                r.seed,
                r.problem,
                r.acquisition.as_str(),
                r.q
            );
        }
    }

    Ok(Manifest { output_dir: manifest.output_dir, workers: manifest.workers, runs })
}

pub fn record_file_name(config: &RunConfig) -> String {
    format!(
        "{}_{}_q{}_seed{}.json",
        config.problem.replace('-', ""),
        config.acquisition.as_str(),
        config.q,
        config.seed
    )
}
