//! Append-only run records, serialized as one JSON document per run.

use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use crate::error::{Error, Result};
use crate::gp::GpHyperparameters;

pub const RECORD_SCHEMA: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recommendation {
    pub inputs: Vec<Vec<f64>>,
    pub predicted_objectives: Vec<Vec<f64>>,
    pub c_fea_accepted: f64,
    /// Confidence levels tried, in order, until the frontier was non-empty.
    pub c_fea_backoff: Vec<f64>,
    pub empty: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationSummary {
    pub median: f64,
    pub p10: f64,
    pub p90: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub queried: Vec<Vec<f64>>,
    pub observed: Vec<Vec<f64>>,
    pub recommendation: Recommendation,
    pub log_hv_difference: f64,
    pub calibration: Option<CalibrationSummary>,
    pub hyperparameters: Vec<GpHyperparameters>,
}

/// Metrics computed right after the initial design, before any BO query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineRecord {
    pub recommendation: Recommendation,
    pub log_hv_difference: f64,
    pub calibration: Option<CalibrationSummary>,
    pub hyperparameters: Vec<GpHyperparameters>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub per_iteration_secs: Vec<f64>,
    pub total_secs: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoRunRecord {
    pub schema: u32,
    pub config: RunConfig,
    pub initial_inputs: Vec<Vec<f64>>,
    pub initial_outputs: Vec<Vec<f64>>,
    pub baseline: Option<BaselineRecord>,
    pub iterations: Vec<IterationRecord>,
    pub flags: Vec<String>,
    /// Set when the run stopped early (e.g. unrecoverable fit failure).
    pub aborted: Option<String>,
    pub timings: Timings,
}

impl BoRunRecord {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("record serialization")
    }

    pub fn from_json(raw: &str) -> Result<Self> {
        serde_json::from_str(raw).map_err(|e| Error::Config(format!("bad record: {e}")))
    }

    /// Canonical JSON with wall times zeroed: the deterministic view used for
    /// bit-identity checks across repeated runs.
    pub fn deterministic_json(&self) -> String {
        let mut copy = self.clone();
        copy.timings = Timings::default();
        copy.to_json()
    }

    /// Flat (iteration, metric, value) rows for CSV export. Iteration 0 holds
    /// the baseline metrics.
    pub fn metric_rows(&self) -> Vec<(usize, &'static str, f64)> {
        let mut rows = Vec::new();
        let push_common =
            |rows: &mut Vec<(usize, &'static str, f64)>,
             iter: usize,
             lhd: f64,
             cal: &Option<CalibrationSummary>| {
                rows.push((iter, "log_hv_difference", lhd));
                if let Some(c) = cal {
                    rows.push((iter, "calibration_median", c.median));
                    rows.push((iter, "calibration_p10", c.p10));
                    rows.push((iter, "calibration_p90", c.p90));
                }
            };
        if let Some(b) = &self.baseline {
            push_common(&mut rows, 0, b.log_hv_difference, &b.calibration);
        }
        for it in &self.iterations {
            push_common(&mut rows, it.iteration, it.log_hv_difference, &it.calibration);
        }
        rows
    }
}
