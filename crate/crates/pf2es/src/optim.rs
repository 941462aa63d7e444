//! Multi-start gradient-based maximization over a box, used both for
//! acquisition optimization and for MAP hyperparameter fitting.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::problem::Bounds;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerConfig {
    /// Random candidates scored before gradient refinement.
    pub n_random: usize,
    /// Gradient starts are min(starts_per_unit * q * d, starts_cap).
    pub starts_per_unit: usize,
    pub starts_cap: usize,
    pub max_iterations: usize,
    /// Convergence tolerance on the projected gradient norm.
    pub gradient_tol: f64,
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            n_random: 5000,
            starts_per_unit: 10,
            starts_cap: 100,
            max_iterations: 100,
            gradient_tol: 1e-6,
            seed: 0,
        }
    }
}

impl OptimizerConfig {
    pub fn n_starts(&self, q: usize, d: usize) -> usize {
        (self.starts_per_unit * q * d).min(self.starts_cap).min(self.n_random).max(1)
    }
}

/// An acquisition over q-point batches, exposing values and gradients w.r.t.
/// every batch coordinate.
pub trait BatchAcquisition: Sync {
    fn value(&self, batch: &[Vec<f64>]) -> f64;
    fn value_grad(&self, batch: &[Vec<f64>]) -> (f64, Vec<Vec<f64>>);
}

#[derive(Debug, Clone)]
pub struct MaximizeResult {
    pub batch: Vec<Vec<f64>>,
    pub value: f64,
    /// Set when every gradient start failed its first line search and the
    /// best random candidate was returned unrefined.
    pub line_search_warning: bool,
    pub n_starts_used: usize,
}

fn project(x: &mut [f64], bounds: &[(f64, f64)]) {
    for (xi, &(lo, hi)) in x.iter_mut().zip(bounds) {
        *xi = xi.clamp(lo, hi);
    }
}

fn projected_gradient_norm(x: &[f64], g: &[f64], bounds: &[(f64, f64)]) -> f64 {
    // ascent: measure how far a unit gradient step can actually move
    x.iter()
        .zip(g)
        .zip(bounds)
        .map(|((&xi, &gi), &(lo, hi))| ((xi + gi).clamp(lo, hi) - xi).abs())
        .fold(0.0f64, f64::max)
}

pub struct LbfgsOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    /// True when not even the first backtracking search improved the start.
    pub stuck_at_start: bool,
}

/// Bounded L-BFGS ascent with projected backtracking line search.
pub fn lbfgs_box_maximize(
    f: &dyn Fn(&[f64]) -> (f64, Vec<f64>),
    x0: &[f64],
    bounds: &[(f64, f64)],
    max_iterations: usize,
    gradient_tol: f64,
) -> LbfgsOutcome {
    const MEMORY: usize = 10;
    const C1: f64 = 1e-4;

    let mut x = x0.to_vec();
    project(&mut x, bounds);
    let (mut fx, mut gx) = f(&x);
    if !fx.is_finite() {
        return LbfgsOutcome { x, value: fx, stuck_at_start: true };
    }

    let mut s_hist: Vec<Vec<f64>> = Vec::new();
    let mut y_hist: Vec<Vec<f64>> = Vec::new();
    let mut rho_hist: Vec<f64> = Vec::new();
    let mut ever_moved = false;

    for _ in 0..max_iterations {
        if projected_gradient_norm(&x, &gx, bounds) <= gradient_tol {
            break;
        }

        // two-loop recursion on the ascent direction
        let mut q = gx.clone();
        let mut alphas = vec![0.0; s_hist.len()];
        for i in (0..s_hist.len()).rev() {
            let a = rho_hist[i] * dot(&s_hist[i], &q);
            alphas[i] = a;
            axpy(-a, &y_hist[i], &mut q);
        }
        if let (Some(s), Some(y)) = (s_hist.last(), y_hist.last()) {
            let gamma = dot(s, y) / dot(y, y).max(1e-300);
            q.iter_mut().for_each(|v| *v *= gamma);
        }
        for i in 0..s_hist.len() {
            let b = rho_hist[i] * dot(&y_hist[i], &q);
            axpy(alphas[i] - b, &s_hist[i], &mut q);
        }
        let mut dir = q;
        if dot(&dir, &gx) <= 0.0 {
            dir = gx.clone(); // fall back to steepest ascent
        }

        // projected backtracking
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let mut xn: Vec<f64> = x.iter().zip(&dir).map(|(&xi, &di)| xi + step * di).collect();
            project(&mut xn, bounds);
            let moved: f64 = xn.iter().zip(&x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            if moved == 0.0 {
                break;
            }
            let (fn_, gn) = f(&xn);
            let progress: f64 = gx.iter().zip(xn.iter().zip(&x)).map(|(&gi, (&a, &b))| gi * (a - b)).sum();
            if fn_.is_finite() && fn_ >= fx + C1 * progress.max(0.0) && fn_ > fx {
                let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
                // gradient ascent: curvature pair uses -(g_new - g_old)
                let y: Vec<f64> = gx.iter().zip(&gn).map(|(old, new)| old - new).collect();
                let sy = dot(&s, &y);
                if sy > 1e-12 {
                    s_hist.push(s);
                    y_hist.push(y);
                    rho_hist.push(1.0 / sy);
                    if s_hist.len() > MEMORY {
                        s_hist.remove(0);
                        y_hist.remove(0);
                        rho_hist.remove(0);
                    }
                }
                x = xn;
                fx = fn_;
                gx = gn;
                accepted = true;
                ever_moved = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }

    LbfgsOutcome { x, value: fx, stuck_at_start: !ever_moved }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

fn unflatten(z: &[f64], q: usize, d: usize) -> Vec<Vec<f64>> {
    (0..q).map(|l| z[l * d..(l + 1) * d].to_vec()).collect()
}

/// Maximize a batch acquisition: score `n_random` uniform q-batches, refine
/// the best `n_starts` with bounded L-BFGS, return the best refined batch.
/// Deterministic given the config seed; ties break toward lower start index.
pub fn multistart_maximize(
    acq: &dyn BatchAcquisition,
    bounds: &Bounds,
    q: usize,
    config: &OptimizerConfig,
) -> MaximizeResult {
    let d = bounds.dim();
    let mut rng = ChaCha12Rng::seed_from_u64(config.seed);
    let flat_bounds: Vec<(f64, f64)> = (0..q * d).map(|i| bounds.0[i % d]).collect();

    let mut candidates: Vec<Vec<f64>> = Vec::with_capacity(config.n_random);
    for _ in 0..config.n_random.max(1) {
        candidates.push(
            flat_bounds.iter().map(|&(lo, hi)| rng.gen_range(lo..=hi)).collect::<Vec<f64>>(),
        );
    }
    let mut scored: Vec<(usize, f64)> = candidates
        .iter()
        .enumerate()
        .map(|(i, z)| (i, acq.value(&unflatten(z, q, d))))
        .collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));

    let n_starts = config.n_starts(q, d);
    let best_random_value = scored[0].1;
    let best_random = candidates[scored[0].0].clone();

    let objective = |z: &[f64]| -> (f64, Vec<f64>) {
        let (v, g) = acq.value_grad(&unflatten(z, q, d));
        (v, g.into_iter().flatten().collect())
    };

    let mut best: Option<(usize, f64, Vec<f64>)> = None;
    let mut all_stuck = true;
    for (rank, &(idx, _)) in scored.iter().take(n_starts).enumerate() {
        let out = lbfgs_box_maximize(
            &objective,
            &candidates[idx],
            &flat_bounds,
            config.max_iterations,
            config.gradient_tol,
        );
        if !out.stuck_at_start {
            all_stuck = false;
        }
        let better = match &best {
            None => out.value.is_finite(),
            Some((_, bv, _)) => out.value > *bv,
        };
        if better {
            best = Some((rank, out.value, out.x));
        }
    }

    match best {
        Some((_, value, z)) if value >= best_random_value => MaximizeResult {
            batch: unflatten(&z, q, d),
            value,
            line_search_warning: all_stuck,
            n_starts_used: n_starts,
        },
        _ => MaximizeResult {
            batch: unflatten(&best_random, q, d),
            value: best_random_value,
            line_search_warning: true,
            n_starts_used: n_starts,
        },
    }
}
