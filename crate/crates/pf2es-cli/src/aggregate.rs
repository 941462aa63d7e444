//! Aggregation of run records into per-iteration percentile curves and SVG
//! plots. Regret uses median with 25-75 percentiles, uncertainty calibration
//! uses median with 10-90 percentiles. Output is byte-stable for unchanged
//! inputs.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::Context;
use pf2es::bo::BoRunRecord;

use crate::svg;

fn percentile(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    if sorted.len() == 1 {
        return sorted[0];
    }
    let rank = p / 100.0 * (sorted.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (rank - lo as f64)
}

/// Series key: problem, acquisition, q, and a sweep tag derived from the
/// config fields that vary inside a (problem, acquisition, q) cell.
type GroupKey = (String, String, usize, String);

pub struct AggregatedSeries {
    pub key: GroupKey,
    /// iteration -> (median, p25, p75) of the log hypervolume difference
    pub regret: BTreeMap<usize, (f64, f64, f64)>,
    /// iteration -> (median of medians, p10, p90) of the calibration summary
    pub calibration: BTreeMap<usize, (f64, f64, f64)>,
    pub n_seeds: usize,
}

pub fn load_records(dir: &Path) -> anyhow::Result<Vec<BoRunRecord>> {
    let mut paths: Vec<_> = std::fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .collect();
    paths.sort();
    let mut records = Vec::new();
    for p in paths {
        let raw = std::fs::read_to_string(&p)?;
        match BoRunRecord::from_json(&raw) {
            Ok(r) => records.push(r),
            Err(e) => eprintln!("warning: skipping {}: {e}", p.display()),
        }
    }
    if records.is_empty() {
        anyhow::bail!("no readable record files in {}", dir.display());
    }
    Ok(records)
}

fn sweep_tag(records: &[&BoRunRecord], rec: &BoRunRecord) -> String {
    let cs: Vec<f64> = records.iter().map(|r| r.config.epsilon.c).collect();
    let mcs: Vec<usize> = records.iter().map(|r| r.config.n_mc).collect();
    let mut parts = Vec::new();
    if cs.iter().any(|&c| c != cs[0]) {
        parts.push(format!("c={}", rec.config.epsilon.c));
    }
    if mcs.iter().any(|&m| m != mcs[0]) {
        parts.push(format!("n_mc={}", rec.config.n_mc));
    }
    parts.join(",")
}

pub fn aggregate(records: &[BoRunRecord]) -> Vec<AggregatedSeries> {
    // first group by the base cell to detect swept parameters
    let mut cells: BTreeMap<(String, String, usize), Vec<&BoRunRecord>> = BTreeMap::new();
    for r in records {
        cells
            .entry((r.config.problem.clone(), r.config.acquisition.as_str().to_string(), r.config.q))
            .or_default()
            .push(r);
    }

    let mut groups: BTreeMap<GroupKey, Vec<&BoRunRecord>> = BTreeMap::new();
    for (cell, cell_records) in &cells {
        for r in cell_records {
            let tag = sweep_tag(cell_records, r);
            groups.entry((cell.0.clone(), cell.1.clone(), cell.2, tag)).or_default().push(r);
        }
    }

    let mut out = Vec::new();
    for (key, group) in groups {
        let budgets: Vec<usize> = group.iter().map(|r| r.iterations.len()).collect();
        let common = budgets.iter().copied().min().unwrap_or(0);
        if budgets.iter().any(|&b| b != common) {
            eprintln!(
                "warning: inconsistent budgets {budgets:?} in ({}, {}, q={}); aggregating the common prefix {common}",
                key.0, key.1, key.2
            );
        }
        let mut regret = BTreeMap::new();
        let mut calibration = BTreeMap::new();
        for iteration in 0..=common {
            let mut lhd = Vec::new();
            let mut cal_median = Vec::new();
            let mut cal_p10 = Vec::new();
            let mut cal_p90 = Vec::new();
            for r in &group {
                let (value, cal) = if iteration == 0 {
                    match &r.baseline {
                        Some(b) => (Some(b.log_hv_difference), b.calibration.clone()),
                        None => (None, None),
                    }
                } else {
                    let it = &r.iterations[iteration - 1];
                    (Some(it.log_hv_difference), it.calibration.clone())
                };
                if let Some(v) = value {
                    lhd.push(v);
                }
                if let Some(c) = cal {
                    cal_median.push(c.median);
                    cal_p10.push(c.p10);
                    cal_p90.push(c.p90);
                }
            }
            if !lhd.is_empty() {
                lhd.sort_by(f64::total_cmp);
                regret.insert(
                    iteration,
                    (percentile(&lhd, 50.0), percentile(&lhd, 25.0), percentile(&lhd, 75.0)),
                );
            }
            if !cal_median.is_empty() {
                cal_median.sort_by(f64::total_cmp);
                cal_p10.sort_by(f64::total_cmp);
                cal_p90.sort_by(f64::total_cmp);
                calibration.insert(
                    iteration,
                    (
                        percentile(&cal_median, 50.0),
                        percentile(&cal_p10, 50.0),
                        percentile(&cal_p90, 50.0),
                    ),
                );
            }
        }
        out.push(AggregatedSeries { key, regret, calibration, n_seeds: group.len() });
    }
    out
}

pub fn write_aggregate_csv(series: &[AggregatedSeries], path: &Path) -> anyhow::Result<()> {
    let mut out = String::from("problem,acq,q,tag,iteration,metric,value\n");
    for s in series {
        let (problem, acq, q, tag) = &s.key;
        for (iteration, (median, p25, p75)) in &s.regret {
            out.push_str(&format!("{problem},{acq},{q},{tag},{iteration},log_hv_diff_median,{median}\n"));
            out.push_str(&format!("{problem},{acq},{q},{tag},{iteration},log_hv_diff_p25,{p25}\n"));
            out.push_str(&format!("{problem},{acq},{q},{tag},{iteration},log_hv_diff_p75,{p75}\n"));
        }
        for (iteration, (median, p10, p90)) in &s.calibration {
            out.push_str(&format!("{problem},{acq},{q},{tag},{iteration},calibration_median,{median}\n"));
            out.push_str(&format!("{problem},{acq},{q},{tag},{iteration},calibration_p10,{p10}\n"));
            out.push_str(&format!("{problem},{acq},{q},{tag},{iteration},calibration_p90,{p90}\n"));
        }
    }
    std::fs::write(path, out).with_context(|| format!("writing {}", path.display()))
}

pub fn write_svgs(series: &[AggregatedSeries], dir: &Path) -> anyhow::Result<Vec<String>> {
    let mut problems: BTreeMap<String, Vec<&AggregatedSeries>> = BTreeMap::new();
    for s in series {
        problems.entry(s.key.0.clone()).or_default().push(s);
    }
    let mut written = Vec::new();
    for (problem, group) in problems {
        let mut curves = Vec::new();
        for s in &group {
            let label = if s.key.3.is_empty() {
                format!("{} q={} ({} seeds)", s.key.1, s.key.2, s.n_seeds)
            } else {
                format!("{} q={} [{}] ({} seeds)", s.key.1, s.key.2, s.key.3, s.n_seeds)
            };
            let pts: Vec<(f64, f64, f64, f64)> = s
                .regret
                .iter()
                .map(|(&it, &(median, p25, p75))| (it as f64, median, p25, p75))
                .collect();
            if !pts.is_empty() {
                curves.push(svg::Curve { label, points: pts });
            }
        }
        if curves.is_empty() {
            continue;
        }
        let name = format!("{}.svg", problem.replace('-', ""));
        let body = svg::render(
            &format!("{problem}: log10 hypervolume difference"),
            "iteration",
            "log10 HV difference",
            &curves,
        );
        std::fs::write(dir.join(&name), body)?;
        written.push(name);
    }
    Ok(written)
}
