//! Problem definitions, datasets and Pareto dominance.
//!
//! Everything downstream works in the maximization convention: objectives are
//! maximized, a point is feasible iff every constraint value is >= 0.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Axis-aligned design box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bounds(pub Vec<(f64, f64)>);

impl Bounds {
    pub fn new(bounds: Vec<(f64, f64)>) -> Result<Self> {
        if bounds.is_empty() {
            return Err(Error::Config("bounds must have at least one dimension".into()));
        }
        for &(lo, hi) in &bounds {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::Config(format!("invalid bound ({lo}, {hi})")));
            }
        }
        Ok(Bounds(bounds))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn lower(&self, i: usize) -> f64 {
        self.0[i].0
    }

    pub fn upper(&self, i: usize) -> f64 {
        self.0[i].1
    }

    pub fn width(&self, i: usize) -> f64 {
        self.0[i].1 - self.0[i].0
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(&self.0)
                .all(|(&xi, &(lo, hi))| xi >= lo && xi <= hi)
    }

    pub fn clip(&self, x: &mut [f64]) {
        for (xi, &(lo, hi)) in x.iter_mut().zip(&self.0) {
            *xi = xi.clamp(lo, hi);
        }
    }

    /// Scale a point into the unit box.
    pub fn normalize(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.0)
            .map(|(&xi, &(lo, hi))| (xi - lo) / (hi - lo))
            .collect()
    }
}

/// One evaluation of a black box: M objective values and C constraint slacks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputVector {
    pub objectives: Vec<f64>,
    pub constraints: Vec<f64>,
}

impl OutputVector {
    pub fn new(objectives: Vec<f64>, constraints: Vec<f64>) -> Self {
        OutputVector { objectives, constraints }
    }

    pub fn from_row(row: &[f64], m: usize) -> Self {
        OutputVector {
            objectives: row[..m].to_vec(),
            constraints: row[m..].to_vec(),
        }
    }

    /// Feasible iff every constraint slack is non-negative.
    pub fn is_feasible(&self) -> bool {
        self.constraints.iter().all(|&g| g >= 0.0)
    }

    pub fn to_row(&self) -> Vec<f64> {
        let mut row = self.objectives.clone();
        row.extend_from_slice(&self.constraints);
        row
    }
}

/// A black-box problem over a box domain.
#[derive(Clone)]
pub struct ProblemSpec {
    pub name: String,
    pub bounds: Bounds,
    pub num_objectives: usize,
    pub num_constraints: usize,
    evaluator: Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>,
}

impl std::fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("name", &self.name)
            .field("bounds", &self.bounds)
            .field("num_objectives", &self.num_objectives)
            .field("num_constraints", &self.num_constraints)
            .finish()
    }
}

impl ProblemSpec {
    pub fn new(
        name: impl Into<String>,
        bounds: Bounds,
        num_objectives: usize,
        num_constraints: usize,
        evaluator: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Result<Self> {
        if num_objectives == 0 {
            return Err(Error::Config("need at least one objective".into()));
        }
        Ok(ProblemSpec {
            name: name.into(),
            bounds,
            num_objectives,
            num_constraints,
            evaluator: Arc::new(evaluator),
        })
    }

    pub fn dim(&self) -> usize {
        self.bounds.dim()
    }

    pub fn num_outputs(&self) -> usize {
        self.num_objectives + self.num_constraints
    }

    pub fn evaluate(&self, x: &[f64]) -> OutputVector {
        let row = (self.evaluator)(x);
        debug_assert_eq!(row.len(), self.num_outputs());
        debug_assert!(row.iter().all(|v| v.is_finite()), "non-finite evaluation");
        OutputVector::from_row(&row, self.num_objectives)
    }

    pub fn evaluate_batch(&self, xs: &[Vec<f64>]) -> Vec<OutputVector> {
        xs.iter().map(|x| self.evaluate(x)).collect()
    }
}

/// Paired training inputs and raw output rows (M+C columns).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub inputs: Vec<Vec<f64>>,
    pub outputs: Vec<Vec<f64>>,
    pub num_objectives: usize,
    pub num_constraints: usize,
}

impl Dataset {
    pub fn new(
        inputs: Vec<Vec<f64>>,
        outputs: Vec<Vec<f64>>,
        num_objectives: usize,
        num_constraints: usize,
    ) -> Result<Self> {
        if inputs.len() != outputs.len() {
            return Err(Error::Config(format!(
                "inputs ({}) and outputs ({}) must have equal row counts",
                inputs.len(),
                outputs.len()
            )));
        }
        let width = num_objectives + num_constraints;
        if outputs.iter().any(|row| row.len() != width) {
            return Err(Error::Config(format!("output rows must have {width} columns")));
        }
        Ok(Dataset { inputs, outputs, num_objectives, num_constraints })
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn num_outputs(&self) -> usize {
        self.num_objectives + self.num_constraints
    }

    pub fn push(&mut self, x: Vec<f64>, y: &OutputVector) {
        self.inputs.push(x);
        self.outputs.push(y.to_row());
    }

    /// Column `i` of the output matrix.
    pub fn output_column(&self, i: usize) -> Vec<f64> {
        self.outputs.iter().map(|row| row[i]).collect()
    }

    pub fn output_vectors(&self) -> Vec<OutputVector> {
        self.outputs
            .iter()
            .map(|row| OutputVector::from_row(row, self.num_objectives))
            .collect()
    }
}

/// Strict Pareto dominance over objective vectors (maximization).
///
/// `a` dominates `b` iff a >= b coordinate-wise with at least one strict
/// inequality.
pub fn dominates(a: &[f64], b: &[f64]) -> bool {
    assert_eq!(a.len(), b.len(), "dominance requires equal objective counts");
    assert!(!a.is_empty());
    let mut strict = false;
    for (&ai, &bi) in a.iter().zip(b) {
        if ai < bi {
            return false;
        }
        if ai > bi {
            strict = true;
        }
    }
    strict
}

/// Weak dominance: a >= b in every coordinate.
pub fn weakly_dominates(a: &[f64], b: &[f64]) -> bool {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).all(|(&ai, &bi)| ai >= bi)
}

/// Indices of the feasible, non-dominated members of `points`, in input order.
///
/// Infeasible points are never returned; a feasible point is kept unless some
/// other feasible point strictly dominates its objectives. Duplicates are kept.
pub fn non_dominated_indices(points: &[OutputVector]) -> Vec<usize> {
    let feasible: Vec<usize> = (0..points.len()).filter(|&i| points[i].is_feasible()).collect();
    let mut kept = Vec::new();
    'outer: for &i in &feasible {
        for &j in &feasible {
            if j != i && dominates(&points[j].objectives, &points[i].objectives) {
                continue 'outer;
            }
        }
        kept.push(i);
    }
    kept
}

/// Feasible non-dominated subset of `points`, order-stable.
pub fn non_dominated_filter(points: &[OutputVector]) -> Vec<OutputVector> {
    non_dominated_indices(points)
        .into_iter()
        .map(|i| points[i].clone())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obj(v: &[f64]) -> OutputVector {
        OutputVector::new(v.to_vec(), vec![])
    }

    #[test]
    fn dominance_basic_cases() {
        assert!(dominates(&[2.0, 2.0], &[1.0, 1.0]));
        assert!(!dominates(&[1.0, 2.0], &[2.0, 1.0]));
        assert!(!dominates(&[2.0, 1.0], &[1.0, 2.0]));
        assert!(!dominates(&[1.0, 1.0], &[1.0, 1.0]));
        // weak improvement in one coordinate is enough
        assert!(dominates(&[1.0, 2.0], &[1.0, 1.0]));
    }

    #[test]
    #[should_panic]
    fn dominance_length_mismatch_panics() {
        dominates(&[1.0], &[1.0, 2.0]);
    }

    #[test]
    fn filter_drops_dominated_and_infeasible() {
        let pts = vec![obj(&[2.0, 1.0]), obj(&[1.0, 2.0]), obj(&[0.0, 0.0])];
        let out = non_dominated_filter(&pts);
        assert_eq!(out, vec![obj(&[2.0, 1.0]), obj(&[1.0, 2.0])]);

        let pts = vec![
            OutputVector::new(vec![5.0, 5.0], vec![-1.0]),
            OutputVector::new(vec![1.0, 1.0], vec![1.0]),
        ];
        let out = non_dominated_filter(&pts);
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].objectives, vec![1.0, 1.0]);
    }

    #[test]
    fn filter_keeps_duplicates_and_empty_input() {
        let pts = vec![obj(&[1.0, 1.0]), obj(&[1.0, 1.0])];
        assert_eq!(non_dominated_filter(&pts).len(), 2);
        assert!(non_dominated_filter(&[]).is_empty());
    }

    #[test]
    fn filter_matches_bruteforce_on_random_points() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(7);
        let pts: Vec<OutputVector> =
            (0..50).map(|_| obj(&[rng.gen::<f64>(), rng.gen::<f64>()])).collect();
        // exhaustive pairwise dominance oracle
        let mut expect = Vec::new();
        for i in 0..pts.len() {
            let dominated = (0..pts.len())
                .any(|j| j != i && dominates(&pts[j].objectives, &pts[i].objectives));
            if !dominated {
                expect.push(pts[i].clone());
            }
        }
        assert_eq!(non_dominated_filter(&pts), expect);
    }

    #[test]
    fn filter_is_idempotent_and_excluded_are_dominated() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(9);
        for _ in 0..20 {
            let pts: Vec<OutputVector> =
                (0..30).map(|_| obj(&[rng.gen::<f64>(), rng.gen::<f64>(), rng.gen::<f64>()])).collect();
            let once = non_dominated_filter(&pts);
            assert_eq!(non_dominated_filter(&once), once);
            for p in &pts {
                if !once.contains(p) {
                    assert!(once.iter().any(|q| dominates(&q.objectives, &p.objectives)));
                }
            }
        }
    }

    #[test]
    fn dominance_is_a_strict_partial_order_on_random_triples() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(11);
        for _ in 0..500 {
            let v: Vec<Vec<f64>> = (0..3)
                .map(|_| (0..3).map(|_| (rng.gen::<f64>() * 4.0).round()).collect())
                .collect();
            let (a, b, c) = (&v[0], &v[1], &v[2]);
            assert!(!dominates(a, a), "irreflexive");
            if dominates(a, b) {
                assert!(!dominates(b, a), "antisymmetric");
            }
            if dominates(a, b) && dominates(b, c) {
                assert!(dominates(a, c), "transitive");
            }
        }
    }
}
