//! Multi-objective machinery: NSGA-II, hypervolume, frontier sampling.

mod frontier;
mod hypervolume;
mod nsga2;

pub use frontier::sample_pareto_frontiers;
pub use hypervolume::hypervolume;
pub use nsga2::{nsga2, Nsga2Config};

use serde::{Deserialize, Serialize};

use crate::problem::dominates;

/// A cheap vector-valued function of the design variables, evaluated in
/// batches so implementations can vectorize.
pub trait MultiOutputFn: Sync {
    /// Rows of M objective values followed by C constraint slacks.
    fn eval_batch(&self, xs: &[Vec<f64>]) -> Vec<Vec<f64>>;
}

impl<F> MultiOutputFn for F
where
    F: Fn(&[f64]) -> Vec<f64> + Sync,
{
    fn eval_batch(&self, xs: &[Vec<f64>]) -> Vec<Vec<f64>> {
        xs.iter().map(|x| self(x)).collect()
    }
}

/// A finite mutually non-dominated set of objective vectors together with the
/// inputs and constraint outputs that generated them. May be empty for
/// constrained problems.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParetoFrontierSample {
    pub inputs: Vec<Vec<f64>>,
    pub objectives: Vec<Vec<f64>>,
    pub constraints: Vec<Vec<f64>>,
}

impl ParetoFrontierSample {
    pub fn empty() -> Self {
        ParetoFrontierSample { inputs: Vec::new(), objectives: Vec::new(), constraints: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.objectives.len()
    }

    pub fn is_empty(&self) -> bool {
        self.objectives.is_empty()
    }

    pub fn num_objectives(&self) -> usize {
        self.objectives.first().map_or(0, |o| o.len())
    }

    /// True when no member strictly dominates another.
    pub fn is_mutually_non_dominated(&self) -> bool {
        for (i, a) in self.objectives.iter().enumerate() {
            for (j, b) in self.objectives.iter().enumerate() {
                if i != j && dominates(a, b) {
                    return false;
                }
            }
        }
        true
    }
}
