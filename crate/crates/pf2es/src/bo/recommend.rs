//! Out-of-sample recommendation: optimize posterior means under a
//! probability-of-feasibility chance constraint, backing the confidence off
//! until the recommended set is non-empty.

use super::config::RecommendationConfig;
use super::record::Recommendation;
use crate::derive_seed;
use crate::gp::IndependentGpSurrogate;
use crate::moo::{nsga2, MultiOutputFn, Nsga2Config};
use crate::problem::non_dominated_indices;

struct ChanceConstrainedMeans<'a> {
    surrogate: &'a IndependentGpSurrogate,
    eta: Vec<f64>,
    c_fea: f64,
}

impl MultiOutputFn for ChanceConstrainedMeans<'_> {
    fn eval_batch(&self, xs: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let m = self.surrogate.num_objectives;
        let c = self.surrogate.num_constraints;
        let moments = match self.surrogate.posterior(xs, false) {
            Ok(m) => m,
            Err(_) => {
                return vec![vec![f64::NEG_INFINITY; m + c]; xs.len()];
            }
        };
        (0..xs.len())
            .map(|i| {
                let mut row: Vec<f64> = (0..m).map(|k| moments.means[k][i]).collect();
                for j in 0..c {
                    let k = m + j;
                    let mean = moments.means[k][i];
                    let sigma = moments.variances[k][i].max(0.0).sqrt();
                    let prob = if sigma == 0.0 {
                        if mean >= self.eta[j] { 1.0 } else { 0.0 }
                    } else {
                        0.5 * statrs::function::erf::erfc(
                            -((mean - self.eta[j]) / sigma) / std::f64::consts::SQRT_2,
                        )
                    };
                    row.push(prob - self.c_fea);
                }
                row
            })
            .collect()
    }
}

/// Maximize the posterior means subject to P(g_j >= eta_j) >= C_Fea per
/// constraint; on an empty result the confidence is decreased stepwise until
/// a non-empty frontier appears or the confidence is exhausted.
pub fn recommend_out_of_sample(
    surrogate: &IndependentGpSurrogate,
    config: &RecommendationConfig,
    nsga2_config: &Nsga2Config,
    seed: u64,
) -> Recommendation {
    let dataset = surrogate.dataset();
    let m = surrogate.num_objectives;
    let c = surrogate.num_constraints;
    let eta: Vec<f64> = (0..c)
        .map(|j| {
            let col = dataset.output_column(m + j);
            let lo = col.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = col.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            config.eta_fraction * (hi - lo)
        })
        .collect();

    let mut c_fea = config.c_fea;
    let mut backoff = Vec::new();
    let mut round = 0u64;
    loop {
        backoff.push(c_fea);
        let objective = ChanceConstrainedMeans { surrogate, eta: eta.clone(), c_fea };
        let mut cfg = nsga2_config.clone();
        cfg.seed = derive_seed(seed, round);
        cfg.seed_population = dataset.inputs.clone();
        let front = nsga2(&objective, m, c, &surrogate.bounds, &cfg);
        if !front.is_empty() {
            return Recommendation {
                inputs: front.inputs,
                predicted_objectives: front.objectives,
                c_fea_accepted: c_fea,
                c_fea_backoff: backoff,
                empty: false,
            };
        }
        c_fea -= config.backoff_step;
        round += 1;
        if c_fea <= 0.0 {
            return Recommendation {
                inputs: Vec::new(),
                predicted_objectives: Vec::new(),
                c_fea_accepted: 0.0,
                c_fea_backoff: backoff,
                empty: true,
            };
        }
    }
}

/// Feasible non-dominated subset of the observed data.
pub fn recommend_in_sample(surrogate: &IndependentGpSurrogate) -> Recommendation {
    let dataset = surrogate.dataset();
    let outputs = dataset.output_vectors();
    let idx = non_dominated_indices(&outputs);
    Recommendation {
        inputs: idx.iter().map(|&i| dataset.inputs[i].clone()).collect(),
        predicted_objectives: idx.iter().map(|&i| outputs[i].objectives.clone()).collect(),
        c_fea_accepted: 1.0,
        c_fea_backoff: Vec::new(),
        empty: idx.is_empty(),
    }
}
