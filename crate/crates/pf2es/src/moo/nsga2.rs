//! Embedded NSGA-II with parameter-less (feasibility-first) constraint handling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use super::{MultiOutputFn, ParetoFrontierSample};
use crate::problem::{dominates, Bounds};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct Nsga2Config {
    pub population: usize,
    pub generations: usize,
    pub crossover_prob: f64,
    pub crossover_eta: f64,
    /// Per-variable mutation probability; `None` means 1/d.
    pub mutation_prob: Option<f64>,
    pub mutation_eta: f64,
    pub seed: u64,
    /// Points injected into the initial population (clipped to bounds).
    #[serde(default)]
    pub seed_population: Vec<Vec<f64>>,
}

impl Default for Nsga2Config {
    fn default() -> Self {
        Nsga2Config {
            population: 50,
            generations: 300,
            crossover_prob: 0.9,
            crossover_eta: 15.0,
            mutation_prob: None,
            mutation_eta: 20.0,
            seed: 0,
            seed_population: Vec::new(),
        }
    }
}

impl Nsga2Config {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_budget(mut self, population: usize, generations: usize) -> Self {
        self.population = population;
        self.generations = generations;
        self
    }
}

struct Individual {
    x: Vec<f64>,
    objectives: Vec<f64>,
    constraints: Vec<f64>,
    violation: f64,
}

fn total_violation(constraints: &[f64]) -> f64 {
    constraints.iter().map(|&g| (-g).max(0.0)).sum()
}

/// Deb's parameter-less comparison: feasible beats infeasible, infeasible
/// points compare by total violation, feasible points by Pareto dominance.
fn constrained_dominates(a: &Individual, b: &Individual) -> bool {
    if a.violation == 0.0 && b.violation == 0.0 {
        dominates(&a.objectives, &b.objectives)
    } else {
        a.violation < b.violation
    }
}

fn fast_non_dominated_sort(pop: &[Individual]) -> Vec<Vec<usize>> {
    let n = pop.len();
    let mut dominated_by: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut count = vec![0usize; n];
    for p in 0..n {
        for q in 0..n {
            if p == q {
                continue;
            }
            if constrained_dominates(&pop[p], &pop[q]) {
                dominated_by[p].push(q);
            } else if constrained_dominates(&pop[q], &pop[p]) {
                count[p] += 1;
            }
        }
    }
    let mut fronts = vec![(0..n).filter(|&p| count[p] == 0).collect::<Vec<_>>()];
    loop {
        let mut next = Vec::new();
        for &p in fronts.last().unwrap() {
            for &q in &dominated_by[p] {
                count[q] -= 1;
                if count[q] == 0 {
                    next.push(q);
                }
            }
        }
        if next.is_empty() {
            break;
        }
        fronts.push(next);
    }
    fronts
}

fn crowding_distance(pop: &[Individual], front: &[usize]) -> Vec<f64> {
    let n = front.len();
    let mut dist = vec![0.0f64; n];
    if n <= 2 {
        return vec![f64::INFINITY; n];
    }
    let m = pop[front[0]].objectives.len();
    for k in 0..m {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| pop[front[a]].objectives[k].total_cmp(&pop[front[b]].objectives[k]));
        let lo = pop[front[order[0]]].objectives[k];
        let hi = pop[front[order[n - 1]]].objectives[k];
        dist[order[0]] = f64::INFINITY;
        dist[order[n - 1]] = f64::INFINITY;
        if hi - lo <= 0.0 {
            continue;
        }
        for w in 1..n - 1 {
            let prev = pop[front[order[w - 1]]].objectives[k];
            let next = pop[front[order[w + 1]]].objectives[k];
            dist[order[w]] += (next - prev) / (hi - lo);
        }
    }
    dist
}

fn sbx_crossover(
    p1: &[f64],
    p2: &[f64],
    eta: f64,
    prob: f64,
    bounds: &Bounds,
    rng: &mut ChaCha12Rng,
) -> (Vec<f64>, Vec<f64>) {
    let mut c1 = p1.to_vec();
    let mut c2 = p2.to_vec();
    if rng.gen::<f64>() < prob {
        for i in 0..c1.len() {
            if rng.gen::<f64>() < 0.5 && (c1[i] - c2[i]).abs() > 1e-14 {
                let u: f64 = rng.gen();
                let beta = if u <= 0.5 {
                    (2.0 * u).powf(1.0 / (eta + 1.0))
                } else {
                    (1.0 / (2.0 * (1.0 - u))).powf(1.0 / (eta + 1.0))
                };
                let (a, b) = (c1[i], c2[i]);
                c1[i] = 0.5 * ((1.0 + beta) * a + (1.0 - beta) * b);
                c2[i] = 0.5 * ((1.0 - beta) * a + (1.0 + beta) * b);
            }
        }
        bounds.clip(&mut c1);
        bounds.clip(&mut c2);
    }
    (c1, c2)
}

fn polynomial_mutation(x: &mut [f64], eta: f64, prob: f64, bounds: &Bounds, rng: &mut ChaCha12Rng) {
    for i in 0..x.len() {
        if rng.gen::<f64>() < prob {
            let (lo, hi) = (bounds.lower(i), bounds.upper(i));
            let u: f64 = rng.gen();
            let delta = if u < 0.5 {
                (2.0 * u).powf(1.0 / (eta + 1.0)) - 1.0
            } else {
                1.0 - (2.0 * (1.0 - u)).powf(1.0 / (eta + 1.0))
            };
            x[i] = (x[i] + delta * (hi - lo)).clamp(lo, hi);
        }
    }
}

/// Run NSGA-II on an M-objective, C-constraint vector function over `bounds`.
///
/// Returns the feasible non-dominated set of the final population (exact
/// duplicate objective rows collapsed); empty when no feasible point was
/// retained.
pub fn nsga2(
    f: &dyn MultiOutputFn,
    num_objectives: usize,
    num_constraints: usize,
    bounds: &Bounds,
    config: &Nsga2Config,
) -> ParetoFrontierSample {
    assert!(config.population >= 4 && config.population % 2 == 0, "population must be even and >= 4");
    let d = bounds.dim();
    let pop_size = config.population;
    let mut rng = ChaCha12Rng::seed_from_u64(config.seed);
    let mutation_prob = config.mutation_prob.unwrap_or(1.0 / d as f64);

    let evaluate = |xs: &[Vec<f64>]| -> Vec<Individual> {
        let rows = f.eval_batch(xs);
        xs.iter()
            .zip(rows)
            .map(|(x, row)| {
                debug_assert_eq!(row.len(), num_objectives + num_constraints);
                let constraints = row[num_objectives..].to_vec();
                Individual {
                    x: x.clone(),
                    objectives: row[..num_objectives].to_vec(),
                    violation: total_violation(&constraints),
                    constraints,
                }
            })
            .collect()
    };

    let mut init: Vec<Vec<f64>> = Vec::with_capacity(pop_size);
    for p in config.seed_population.iter().take(pop_size) {
        let mut x = p.clone();
        x.resize(d, 0.0);
        bounds.clip(&mut x);
        init.push(x);
    }
    while init.len() < pop_size {
        init.push((0..d).map(|i| rng.gen_range(bounds.lower(i)..=bounds.upper(i))).collect());
    }
    let mut pop = evaluate(&init);

    for _ in 0..config.generations {
        let fronts = fast_non_dominated_sort(&pop);
        let mut rank = vec![0usize; pop.len()];
        let mut crowd = vec![0.0f64; pop.len()];
        for (r, front) in fronts.iter().enumerate() {
            let dist = crowding_distance(&pop, front);
            for (&idx, &di) in front.iter().zip(&dist) {
                rank[idx] = r;
                crowd[idx] = di;
            }
        }
        let tournament = |rng: &mut ChaCha12Rng| -> usize {
            let a = rng.gen_range(0..pop.len());
            let b = rng.gen_range(0..pop.len());
            if rank[a] != rank[b] {
                if rank[a] < rank[b] { a } else { b }
            } else if crowd[a] != crowd[b] {
                if crowd[a] > crowd[b] { a } else { b }
            } else {
                a
            }
        };

        let mut offspring_x = Vec::with_capacity(pop_size);
        while offspring_x.len() < pop_size {
            let (i, j) = (tournament(&mut rng), tournament(&mut rng));
            let (mut c1, mut c2) = sbx_crossover(
                &pop[i].x,
                &pop[j].x,
                config.crossover_eta,
                config.crossover_prob,
                bounds,
                &mut rng,
            );
            polynomial_mutation(&mut c1, config.mutation_eta, mutation_prob, bounds, &mut rng);
            polynomial_mutation(&mut c2, config.mutation_eta, mutation_prob, bounds, &mut rng);
            offspring_x.push(c1);
            if offspring_x.len() < pop_size {
                offspring_x.push(c2);
            }
        }
        let offspring = evaluate(&offspring_x);
        pop.extend(offspring);

        // environmental selection on the merged population
        let fronts = fast_non_dominated_sort(&pop);
        let mut keep: Vec<usize> = Vec::with_capacity(pop_size);
        for front in &fronts {
            if keep.len() + front.len() <= pop_size {
                keep.extend_from_slice(front);
            } else {
                let dist = crowding_distance(&pop, front);
                let mut order: Vec<usize> = (0..front.len()).collect();
                order.sort_by(|&a, &b| dist[b].total_cmp(&dist[a]).then(a.cmp(&b)));
                keep.extend(order.into_iter().take(pop_size - keep.len()).map(|w| front[w]));
                break;
            }
        }
        let mut marked = vec![false; pop.len()];
        for &idx in &keep {
            marked[idx] = true;
        }
        let mut survivors = Vec::with_capacity(pop_size);
        for (idx, ind) in pop.into_iter().enumerate() {
            if marked[idx] {
                survivors.push(ind);
            }
        }
        pop = survivors;
    }

    // feasible non-dominated set of the final population
    let feasible: Vec<&Individual> = pop.iter().filter(|ind| ind.violation == 0.0).collect();
    let mut inputs = Vec::new();
    let mut objectives: Vec<Vec<f64>> = Vec::new();
    let mut constraints = Vec::new();
    'outer: for ind in &feasible {
        for other in &feasible {
            if dominates(&other.objectives, &ind.objectives) {
                continue 'outer;
            }
        }
        if objectives.iter().any(|o| o == &ind.objectives) {
            continue; // collapse exact duplicates
        }
        inputs.push(ind.x.clone());
        objectives.push(ind.objectives.clone());
        constraints.push(ind.constraints.clone());
    }
    ParetoFrontierSample { inputs, objectives, constraints }
}
