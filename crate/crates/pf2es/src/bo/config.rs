//! Run configuration for the BO loop.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gp::FitConfig;
use crate::moo::Nsga2Config;
use crate::optim::OptimizerConfig;
use crate::partition::EpsilonConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AcquisitionKind {
    Pf2es,
    Qpf2es,
    Mopi,
    Random,
    Pf2esKb,
}

impl AcquisitionKind {
    pub fn parse(name: &str) -> Result<Self> {
        match name.to_lowercase().as_str() {
            "pf2es" => Ok(AcquisitionKind::Pf2es),
            "qpf2es" | "q-pf2es" => Ok(AcquisitionKind::Qpf2es),
            "mopi" => Ok(AcquisitionKind::Mopi),
            "random" => Ok(AcquisitionKind::Random),
            "pf2es_kb" | "pf2es-kb" => Ok(AcquisitionKind::Pf2esKb),
            other => Err(Error::Config(format!("unknown acquisition kind: {other}"))),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            AcquisitionKind::Pf2es => "pf2es",
            AcquisitionKind::Qpf2es => "qpf2es",
            AcquisitionKind::Mopi => "mopi",
            AcquisitionKind::Random => "random",
            AcquisitionKind::Pf2esKb => "pf2es_kb",
        }
    }
}

/// Out-of-sample recommendation settings: chance-constraint confidence with
/// back-off, and the per-constraint slack as a fraction of the observed range.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct RecommendationConfig {
    pub c_fea: f64,
    pub backoff_step: f64,
    pub eta_fraction: f64,
}

impl Default for RecommendationConfig {
    fn default() -> Self {
        RecommendationConfig { c_fea: 0.95, backoff_step: 0.05, eta_fraction: 0.005 }
    }
}

fn default_q() -> usize {
    1
}
fn default_frontier_samples() -> usize {
    5
}
fn default_tau() -> f64 {
    1e-3
}
fn default_n_mc() -> usize {
    128
}
fn default_n_features() -> usize {
    512
}
fn default_calibration_every() -> usize {
    1
}
fn default_calibration_samples() -> usize {
    10
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub problem: String,
    pub acquisition: AcquisitionKind,
    #[serde(default = "default_q")]
    pub q: usize,
    pub budget: usize,
    #[serde(default = "default_frontier_samples")]
    pub n_frontier_samples: usize,
    #[serde(default)]
    pub epsilon: EpsilonConfig,
    #[serde(default = "default_tau")]
    pub tau: f64,
    #[serde(default = "default_n_mc")]
    pub n_mc: usize,
    #[serde(default = "default_n_features")]
    pub n_features: usize,
    pub seed: u64,
    #[serde(default)]
    pub nsga2: Nsga2Config,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
    #[serde(default)]
    pub fit: FitConfig,
    #[serde(default)]
    pub recommendation: RecommendationConfig,
    /// Calibrate every this many iterations (always at iteration 0 and the
    /// final iteration); 0 means only at iteration 0 and the end.
    #[serde(default = "default_calibration_every")]
    pub calibration_every: usize,
    #[serde(default = "default_calibration_samples")]
    pub calibration_samples: usize,
    /// Recommend the feasible non-dominated subset of the observed data
    /// instead of optimizing the model.
    #[serde(default)]
    pub in_sample_recommendation: bool,
}

impl RunConfig {
    pub fn new(problem: impl Into<String>, acquisition: AcquisitionKind, budget: usize, seed: u64) -> Self {
        RunConfig {
            problem: problem.into(),
            acquisition,
            q: 1,
            budget,
            n_frontier_samples: default_frontier_samples(),
            epsilon: EpsilonConfig::default(),
            tau: default_tau(),
            n_mc: default_n_mc(),
            n_features: default_n_features(),
            seed,
            nsga2: Nsga2Config::default(),
            optimizer: OptimizerConfig::default(),
            fit: FitConfig::default(),
            recommendation: RecommendationConfig::default(),
            calibration_every: default_calibration_every(),
            calibration_samples: default_calibration_samples(),
            in_sample_recommendation: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.q == 0 {
            return Err(Error::Config("q must be at least 1".into()));
        }
        match self.acquisition {
            AcquisitionKind::Pf2es | AcquisitionKind::Mopi => {
                if self.q != 1 {
                    return Err(Error::Config(format!(
                        "{} is sequential; q must be 1 (got {})",
                        self.acquisition.as_str(),
                        self.q
                    )));
                }
            }
            _ => {}
        }
        if self.n_frontier_samples == 0 {
            return Err(Error::Config("n_frontier_samples must be at least 1".into()));
        }
        if self.tau <= 0.0 {
            return Err(Error::Config("tau must be positive".into()));
        }
        if self.n_mc == 0 {
            return Err(Error::Config("n_mc must be at least 1".into()));
        }
        if !(0.0 < self.recommendation.c_fea && self.recommendation.c_fea <= 1.0) {
            return Err(Error::Config("c_fea must lie in (0, 1]".into()));
        }
        crate::benchmarks::benchmark(&self.problem).map(|_| ())
    }
}
