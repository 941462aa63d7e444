//! Pareto-frontier sampling: optimize NSGA-II over GP trajectory draws.

use rayon::prelude::*;

use super::{nsga2, Nsga2Config, ParetoFrontierSample};
use crate::derive_seed;
use crate::gp::IndependentGpSurrogate;

/// Draw `count` independent trajectory bundles from the surrogate and run
/// NSGA-II on each, returning one (possibly empty) frontier per trajectory.
pub fn sample_pareto_frontiers(
    surrogate: &IndependentGpSurrogate,
    count: usize,
    n_features: usize,
    config: &Nsga2Config,
    seed: u64,
) -> Vec<ParetoFrontierSample> {
    (0..count)
        .into_par_iter()
        .map(|i| {
            let trajectory = surrogate.sample_trajectory(n_features, derive_seed(seed, 2 * i as u64));
            let mut cfg = config.clone();
            cfg.seed = derive_seed(seed, 2 * i as u64 + 1);
            nsga2(
                &trajectory,
                surrogate.num_objectives,
                surrogate.num_constraints,
                &surrogate.bounds,
                &cfg,
            )
        })
        .collect()
}
