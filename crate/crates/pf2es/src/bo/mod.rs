//! End-to-end BO orchestration: initial design, per-iteration model fitting,
//! frontier sampling, acquisition maximization, evaluation, greedy batching,
//! recommendation and metrics.

mod config;
mod metrics;
mod recommend;
mod record;

pub use config::{AcquisitionKind, RecommendationConfig, RunConfig};
pub use metrics::{log_hv_difference, uncertainty_calibration};
pub use recommend::{recommend_in_sample, recommend_out_of_sample};
pub use record::{
    BaselineRecord, BoRunRecord, CalibrationSummary, IterationRecord, Recommendation, Timings,
    RECORD_SCHEMA,
};

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::acquisition::{
    objective_partition, AcquisitionState, MopiObjective, Pf2esObjective, PofObjective,
    QPf2esObjective,
};
use crate::benchmarks::{benchmark, BenchmarkProblem};
use crate::derive_seed;
use crate::error::Result;
use crate::gp::{FitConfig, IndependentGpSurrogate};
use crate::moo::{sample_pareto_frontiers, ParetoFrontierSample};
use crate::optim::multistart_maximize;
use crate::partition::shift_frontier;
use crate::problem::{non_dominated_indices, Dataset};

// seed streams within one run
const STREAM_INIT: u64 = 1;
const STREAM_FIT: u64 = 10_000;
const STREAM_FIT_RETRY: u64 = 20_000;
const STREAM_RANDOM_QUERY: u64 = 30_000;
const STREAM_FRONTIERS: u64 = 40_000;
const STREAM_STATE: u64 = 50_000;
const STREAM_OPTIMIZER: u64 = 60_000;
const STREAM_RECOMMEND: u64 = 70_000;
const STREAM_CALIBRATE: u64 = 80_000;
const STREAM_KB: u64 = 90_000;

fn uniform_points(
    problem: &BenchmarkProblem,
    count: usize,
    rng: &mut ChaCha12Rng,
) -> Vec<Vec<f64>> {
    let b = &problem.spec.bounds;
    (0..count)
        .map(|_| (0..b.dim()).map(|i| rng.gen_range(b.lower(i)..=b.upper(i))).collect())
        .collect()
}

fn fit_with_retry(
    dataset: &Dataset,
    problem: &BenchmarkProblem,
    base_fit: &FitConfig,
    seed: u64,
    iteration: usize,
) -> Result<IndependentGpSurrogate> {
    let mut cfg = base_fit.clone();
    cfg.seed = derive_seed(seed, STREAM_FIT + iteration as u64);
    match IndependentGpSurrogate::fit_map(dataset, &problem.spec.bounds, &cfg) {
        Ok(s) => Ok(s),
        Err(_) => {
            cfg.seed = derive_seed(seed, STREAM_FIT_RETRY + iteration as u64);
            IndependentGpSurrogate::fit_map(dataset, &problem.spec.bounds, &cfg)
        }
    }
}

fn should_calibrate(config: &RunConfig, iteration: usize) -> bool {
    if iteration == 0 || iteration == config.budget {
        return true;
    }
    config.calibration_every != 0 && iteration % config.calibration_every == 0
}

struct IterationMetrics {
    recommendation: Recommendation,
    log_hv_difference: f64,
    calibration: Option<CalibrationSummary>,
}

fn compute_metrics(
    surrogate: &IndependentGpSurrogate,
    problem: &BenchmarkProblem,
    config: &RunConfig,
    iteration: usize,
) -> IterationMetrics {
    let recommendation = if config.in_sample_recommendation {
        recommend_in_sample(surrogate)
    } else {
        recommend_out_of_sample(
            surrogate,
            &config.recommendation,
            &config.nsga2,
            derive_seed(config.seed, STREAM_RECOMMEND + iteration as u64),
        )
    };
    let lhd = log_hv_difference(&recommendation.inputs, problem);
    let calibration = if should_calibrate(config, iteration) {
        problem.calibration_ref_max().map(|r| {
            uncertainty_calibration(
                surrogate,
                &r,
                config.calibration_samples,
                config.n_features,
                &config.nsga2,
                derive_seed(config.seed, STREAM_CALIBRATE + iteration as u64),
            )
        })
    } else {
        None
    };
    IterationMetrics { recommendation, log_hv_difference: lhd, calibration }
}

/// Sampled frontiers for the current surrogate; constrained problems seed the
/// NSGA-II population with the training inputs.
fn frontier_samples(
    surrogate: &IndependentGpSurrogate,
    config: &RunConfig,
    iteration: usize,
) -> Vec<ParetoFrontierSample> {
    let mut nsga2_cfg = config.nsga2.clone();
    if surrogate.num_constraints > 0 {
        nsga2_cfg.seed_population = surrogate.dataset().inputs.clone();
    }
    sample_pareto_frontiers(
        surrogate,
        config.n_frontier_samples,
        config.n_features,
        &nsga2_cfg,
        derive_seed(config.seed, STREAM_FRONTIERS + iteration as u64),
    )
}

fn build_state(
    frontiers: &[ParetoFrontierSample],
    surrogate: &IndependentGpSurrogate,
    config: &RunConfig,
    iteration: usize,
    q: usize,
) -> Result<AcquisitionState> {
    AcquisitionState::build(
        frontiers,
        surrogate.num_objectives,
        surrogate.num_constraints,
        config.epsilon,
        config.tau,
        config.n_mc,
        q,
        derive_seed(config.seed, STREAM_STATE + iteration as u64),
    )
}

/// One sequential pf2es maximization for the given surrogate.
fn maximize_pf2es(
    surrogate: &IndependentGpSurrogate,
    config: &RunConfig,
    iteration: usize,
    opt_stream: u64,
    flags: &mut Vec<String>,
) -> Result<Vec<f64>> {
    let frontiers = frontier_samples(surrogate, config, iteration);
    let state = build_state(&frontiers, surrogate, config, iteration, 1)?;
    if state.pure_pof.iter().any(|&p| p) {
        flags.push(format!("iteration {iteration}: empty frontier sample, pure-PoF fallback"));
    }
    let mut opt_cfg = config.optimizer.clone();
    opt_cfg.seed = derive_seed(config.seed, opt_stream);
    let objective = Pf2esObjective { state: &state, surrogate };
    let result = multistart_maximize(&objective, &surrogate.bounds, 1, &opt_cfg);
    if result.line_search_warning {
        flags.push(format!("iteration {iteration}: acquisition optimizer line-search warning"));
    }
    Ok(result.batch.into_iter().next().unwrap())
}

/// Greedy batch construction: select sequentially, fantasizing each selected
/// point's outcome as the posterior mean before conditioning and reselecting.
pub fn kriging_believer_batch(
    surrogate: &IndependentGpSurrogate,
    config: &RunConfig,
    iteration: usize,
    flags: &mut Vec<String>,
) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    let mut fantasy = surrogate.dataset().clone();
    let mut batch = Vec::with_capacity(config.q);
    let mut believed_rows = Vec::with_capacity(config.q);
    let mut current: Option<IndependentGpSurrogate> = None;
    for step in 0..config.q {
        let model = current.as_ref().unwrap_or(surrogate);
        let x = maximize_pf2es(
            model,
            config,
            iteration,
            STREAM_KB + (iteration * config.q + step) as u64,
            flags,
        )?;
        let moments = model.posterior(std::slice::from_ref(&x), false)?;
        let believed: Vec<f64> = moments.means.iter().map(|m| m[0]).collect();
        fantasy.inputs.push(x.clone());
        fantasy.outputs.push(believed.clone());
        believed_rows.push(believed);
        batch.push(x);
        if step + 1 < config.q {
            current = Some(model.condition_on(&fantasy)?);
        }
    }
    Ok((batch, believed_rows))
}

fn select_batch(
    surrogate: &IndependentGpSurrogate,
    problem: &BenchmarkProblem,
    config: &RunConfig,
    iteration: usize,
    flags: &mut Vec<String>,
) -> Result<Vec<Vec<f64>>> {
    match config.acquisition {
        AcquisitionKind::Random => {
            let mut rng = ChaCha12Rng::seed_from_u64(derive_seed(
                config.seed,
                STREAM_RANDOM_QUERY + iteration as u64,
            ));
            Ok(uniform_points(problem, config.q, &mut rng))
        }
        AcquisitionKind::Pf2es => Ok(vec![maximize_pf2es(
            surrogate,
            config,
            iteration,
            STREAM_OPTIMIZER + iteration as u64,
            flags,
        )?]),
        AcquisitionKind::Qpf2es => {
            let frontiers = frontier_samples(surrogate, config, iteration);
            let state = build_state(&frontiers, surrogate, config, iteration, config.q)?;
            if state.pure_pof.iter().any(|&p| p) {
                flags.push(format!(
                    "iteration {iteration}: empty frontier sample, pure-PoF fallback"
                ));
            }
            let mut opt_cfg = config.optimizer.clone();
            opt_cfg.seed = derive_seed(config.seed, STREAM_OPTIMIZER + iteration as u64);
            let objective = QPf2esObjective { state: &state, surrogate };
            let result = multistart_maximize(&objective, &surrogate.bounds, config.q, &opt_cfg);
            if result.line_search_warning {
                flags.push(format!(
                    "iteration {iteration}: acquisition optimizer line-search warning"
                ));
            }
            Ok(result.batch)
        }
        AcquisitionKind::Mopi => {
            // reference frontier: feasible non-dominated observations
            let outputs = surrogate.dataset().output_vectors();
            let idx = non_dominated_indices(&outputs);
            let mut opt_cfg = config.optimizer.clone();
            opt_cfg.seed = derive_seed(config.seed, STREAM_OPTIMIZER + iteration as u64);
            let result = if idx.is_empty() {
                flags.push(format!(
                    "iteration {iteration}: no feasible observation, maximizing feasibility"
                ));
                multistart_maximize(&PofObjective { surrogate }, &surrogate.bounds, 1, &opt_cfg)
            } else {
                let frontier = ParetoFrontierSample {
                    inputs: idx.iter().map(|&i| surrogate.dataset().inputs[i].clone()).collect(),
                    objectives: idx.iter().map(|&i| outputs[i].objectives.clone()).collect(),
                    constraints: idx.iter().map(|&i| outputs[i].constraints.clone()).collect(),
                };
                let shifted = shift_frontier(&frontier, &config.epsilon)?;
                let partition = objective_partition(&shifted)?;
                let objective = MopiObjective { partition: &partition, surrogate };
                multistart_maximize(&objective, &surrogate.bounds, 1, &opt_cfg)
            };
            Ok(result.batch)
        }
        AcquisitionKind::Pf2esKb => {
            let (batch, _) = kriging_believer_batch(surrogate, config, iteration, flags)?;
            Ok(batch)
        }
    }
}

/// Run the full loop: 2d+1 initial uniform points, then per iteration
/// fit / frontier sampling / acquisition maximization / evaluation / metrics.
/// Deterministic given the config seed.
pub fn run_bo(config: &RunConfig) -> Result<BoRunRecord> {
    config.validate()?;
    let problem = benchmark(&config.problem)?;
    let start = Instant::now();

    let mut record = BoRunRecord {
        schema: RECORD_SCHEMA,
        config: config.clone(),
        initial_inputs: Vec::new(),
        initial_outputs: Vec::new(),
        baseline: None,
        iterations: Vec::new(),
        flags: Vec::new(),
        aborted: None,
        timings: Timings::default(),
    };

    let mut rng = ChaCha12Rng::seed_from_u64(derive_seed(config.seed, STREAM_INIT));
    let n_init = 2 * problem.spec.dim() + 1;
    let init_inputs = uniform_points(&problem, n_init, &mut rng);
    let init_outputs: Vec<Vec<f64>> =
        init_inputs.iter().map(|x| problem.spec.evaluate(x).to_row()).collect();
    record.initial_inputs = init_inputs.clone();
    record.initial_outputs = init_outputs.clone();

    let mut dataset = Dataset::new(
        init_inputs,
        init_outputs,
        problem.spec.num_objectives,
        problem.spec.num_constraints,
    )?;

    let mut surrogate = match fit_with_retry(&dataset, &problem, &config.fit, config.seed, 0) {
        Ok(s) => s,
        Err(e) => {
            record.aborted = Some(format!("initial fit failed: {e}"));
            record.timings.total_secs = start.elapsed().as_secs_f64();
            return Ok(record);
        }
    };
    let m0 = compute_metrics(&surrogate, &problem, config, 0);
    record.baseline = Some(BaselineRecord {
        recommendation: m0.recommendation,
        log_hv_difference: m0.log_hv_difference,
        calibration: m0.calibration,
        hyperparameters: surrogate.hyperparameters(),
    });

    for iteration in 1..=config.budget {
        let iter_start = Instant::now();
        let queried = match select_batch(&surrogate, &problem, config, iteration, &mut record.flags)
        {
            Ok(q) => q,
            Err(e) => {
                record.aborted = Some(format!("iteration {iteration}: {e}"));
                break;
            }
        };
        let observed: Vec<Vec<f64>> =
            queried.iter().map(|x| problem.spec.evaluate(x).to_row()).collect();
        for (x, y) in queried.iter().zip(&observed) {
            dataset.inputs.push(x.clone());
            dataset.outputs.push(y.clone());
        }

        surrogate = match fit_with_retry(&dataset, &problem, &config.fit, config.seed, iteration) {
            Ok(s) => s,
            Err(e) => {
                record.aborted = Some(format!("iteration {iteration}: refit failed: {e}"));
                break;
            }
        };
        let metrics = compute_metrics(&surrogate, &problem, config, iteration);
        record.iterations.push(IterationRecord {
            iteration,
            queried,
            observed,
            recommendation: metrics.recommendation,
            log_hv_difference: metrics.log_hv_difference,
            calibration: metrics.calibration,
            hyperparameters: surrogate.hyperparameters(),
        });
        record.timings.per_iteration_secs.push(iter_start.elapsed().as_secs_f64());
    }

    record.timings.total_secs = start.elapsed().as_secs_f64();
    Ok(record)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick_config(problem: &str, kind: AcquisitionKind, budget: usize, seed: u64) -> RunConfig {
        let mut cfg = RunConfig::new(problem, kind, budget, seed);
        // desk-scale budgets so unit tests stay fast
        cfg.nsga2 = cfg.nsga2.with_budget(20, 30);
        cfg.optimizer.n_random = 200;
        cfg.optimizer.max_iterations = 20;
        cfg.n_features = 64;
        cfg.n_frontier_samples = 2;
        cfg.calibration_every = 0;
        cfg.calibration_samples = 3;
        cfg
    }

    #[test]
    fn zero_budget_run_holds_only_the_initial_design() {
        let cfg = quick_config("vlmop2", AcquisitionKind::Random, 0, 3);
        let record = run_bo(&cfg).unwrap();
        assert_eq!(record.initial_inputs.len(), 2 * 2 + 1);
        assert!(record.iterations.is_empty());
        assert!(record.baseline.is_some());
        assert!(record.aborted.is_none());
    }

    #[test]
    fn random_search_queries_are_model_independent_uniform_draws() {
        let cfg = quick_config("vlmop2", AcquisitionKind::Random, 3, 5);
        let record = run_bo(&cfg).unwrap();
        assert_eq!(record.iterations.len(), 3);
        // reproduce the draws straight from the seed stream
        for it in &record.iterations {
            let mut rng = ChaCha12Rng::seed_from_u64(derive_seed(
                cfg.seed,
                STREAM_RANDOM_QUERY + it.iteration as u64,
            ));
            let expect =
                uniform_points(&benchmark("vlmop2").unwrap(), 1, &mut rng);
            assert_eq!(it.queried, expect);
        }
    }

    #[test]
    fn runs_are_bit_identical_given_identical_config() {
        let cfg = quick_config("constr-ex", AcquisitionKind::Pf2es, 2, 11);
        let a = run_bo(&cfg).unwrap();
        let b = run_bo(&cfg).unwrap();
        assert_eq!(a.deterministic_json(), b.deterministic_json());
    }

    #[test]
    fn queried_points_stay_in_bounds_and_observations_align() {
        let cfg = quick_config("c-branincurrin", AcquisitionKind::Pf2es, 2, 7);
        let record = run_bo(&cfg).unwrap();
        let b = benchmark("c-branincurrin").unwrap();
        for it in &record.iterations {
            assert_eq!(it.queried.len(), it.observed.len());
            for x in &it.queried {
                assert!(b.spec.bounds.contains(x), "{x:?}");
            }
        }
    }

    #[test]
    fn kriging_believer_bookkeeping() {
        let mut cfg = quick_config("vlmop2", AcquisitionKind::Pf2esKb, 1, 13);
        cfg.q = 3;
        let problem = benchmark("vlmop2").unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(derive_seed(cfg.seed, STREAM_INIT));
        let inputs = uniform_points(&problem, 5, &mut rng);
        let outputs: Vec<Vec<f64>> =
            inputs.iter().map(|x| problem.spec.evaluate(x).to_row()).collect();
        let dataset = Dataset::new(inputs, outputs, 2, 0).unwrap();
        let surrogate = fit_with_retry(&dataset, &problem, &cfg.fit, cfg.seed, 0).unwrap();

        let mut flags = Vec::new();
        let (batch, believed) = kriging_believer_batch(&surrogate, &cfg, 1, &mut flags).unwrap();
        assert_eq!(batch.len(), 3);
        assert_eq!(believed.len(), 3);
        // the first believed row is the original surrogate's posterior mean
        let moments = surrogate.posterior(std::slice::from_ref(&batch[0]), false).unwrap();
        for (k, b) in believed[0].iter().enumerate() {
            assert!((b - moments.means[k][0]).abs() < 1e-9);
        }
    }

    #[test]
    fn kb_with_q1_equals_sequential_pf2es() {
        let mut cfg = quick_config("vlmop2", AcquisitionKind::Pf2esKb, 1, 17);
        cfg.q = 1;
        let problem = benchmark("vlmop2").unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(derive_seed(cfg.seed, STREAM_INIT));
        let inputs = uniform_points(&problem, 5, &mut rng);
        let outputs: Vec<Vec<f64>> =
            inputs.iter().map(|x| problem.spec.evaluate(x).to_row()).collect();
        let dataset = Dataset::new(inputs, outputs, 2, 0).unwrap();
        let surrogate = fit_with_retry(&dataset, &problem, &cfg.fit, cfg.seed, 0).unwrap();

        let mut flags = Vec::new();
        let (batch, _) = kriging_believer_batch(&surrogate, &cfg, 1, &mut flags).unwrap();
        let x = maximize_pf2es(&surrogate, &cfg, 1, STREAM_KB + cfg.q as u64, &mut flags).unwrap();
        assert_eq!(batch[0], x);
    }

    #[test]
    fn recommendation_backoff_on_hopeless_constraints() {
        // constraint slack is always -1: the model quickly learns PoF ~ 0
        use crate::problem::{Bounds, ProblemSpec};
        let spec = ProblemSpec::new(
            "hopeless",
            Bounds::new(vec![(0.0, 1.0)]).unwrap(),
            1,
            1,
            |x: &[f64]| vec![x[0], -1.0],
        )
        .unwrap();
        let inputs: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64 / 5.0]).collect();
        let outputs: Vec<Vec<f64>> = inputs.iter().map(|x| spec.evaluate(x).to_row()).collect();
        let dataset = Dataset::new(inputs, outputs, 1, 1).unwrap();
        let surrogate =
            IndependentGpSurrogate::fit_map(&dataset, &spec.bounds, &FitConfig::default()).unwrap();
        let rec = recommend_out_of_sample(
            &surrogate,
            &RecommendationConfig::default(),
            &crate::moo::Nsga2Config { population: 12, generations: 10, ..Default::default() },
            5,
        );
        assert!(rec.empty);
        assert!(rec.c_fea_backoff.len() > 1);
        assert!((rec.c_fea_backoff[0] - 0.95).abs() < 1e-12);
        assert!((rec.c_fea_backoff[1] - 0.90).abs() < 1e-12);
    }
}
