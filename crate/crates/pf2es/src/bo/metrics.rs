//! Regret and uncertainty-calibration metrics.

use super::record::CalibrationSummary;
use crate::benchmarks::BenchmarkProblem;
use crate::gp::IndependentGpSurrogate;
use crate::moo::{hypervolume, sample_pareto_frontiers, Nsga2Config};
use crate::problem::non_dominated_filter;

/// log10 of (ideal hypervolume - achieved feasible hypervolume) at the
/// problem's regret reference point. The recommended inputs are re-evaluated
/// on the true functions; model predictions are never scored.
pub fn log_hv_difference(recommended_inputs: &[Vec<f64>], problem: &BenchmarkProblem) -> f64 {
    let ref_max = problem.regret_ref_max();
    let hv = if recommended_inputs.is_empty() {
        0.0
    } else {
        let evaluated: Vec<_> =
            recommended_inputs.iter().map(|x| problem.spec.evaluate(x)).collect();
        let feasible_front = non_dominated_filter(&evaluated);
        let objectives: Vec<Vec<f64>> =
            feasible_front.iter().map(|o| o.objectives.clone()).collect();
        hypervolume(&objectives, &ref_max).unwrap_or(0.0)
    };
    (problem.ideal_hypervolume - hv).max(1e-12).log10()
}

/// Percentile with linear interpolation on the sorted values.
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
    let frac = rank - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Distribution summary of the hypervolume indicator over sampled frontiers:
/// the surrogate's residual uncertainty about the Pareto frontier. Empty
/// frontier samples contribute a hypervolume of zero.
pub fn uncertainty_calibration(
    surrogate: &IndependentGpSurrogate,
    ref_point_max: &[f64],
    n_samples: usize,
    n_features: usize,
    nsga2_config: &Nsga2Config,
    seed: u64,
) -> CalibrationSummary {
    let frontiers = sample_pareto_frontiers(surrogate, n_samples, n_features, nsga2_config, seed);
    let mut hvs: Vec<f64> = frontiers
        .iter()
        .map(|f| if f.is_empty() { 0.0 } else { hypervolume(&f.objectives, ref_point_max).unwrap_or(0.0) })
        .collect();
    hvs.sort_by(f64::total_cmp);
    CalibrationSummary {
        median: percentile(&hvs, 50.0),
        p10: percentile(&hvs, 10.0),
        p90: percentile(&hvs, 90.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchmarks::benchmark;

    #[test]
    fn empty_recommendation_scores_log_of_ideal() {
        let p = benchmark("vlmop2").unwrap();
        let v = log_hv_difference(&[], &p);
        assert!((v - p.ideal_hypervolume.log10()).abs() < 1e-12);
    }

    #[test]
    fn percentiles_interpolate() {
        let v = [1.0, 2.0, 3.0];
        assert_eq!(percentile(&v, 50.0), 2.0);
        assert_eq!(percentile(&v, 0.0), 1.0);
        assert_eq!(percentile(&v, 100.0), 3.0);
        assert!((percentile(&v, 10.0) - 1.2).abs() < 1e-12);
    }
}
