//! Epsilon-shifting of discrete Pareto frontiers and box decomposition of the
//! feasible non-dominated output region, plus the per-box Gaussian
//! probability kernel.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moo::ParetoFrontierSample;

/// Stand-in for the ideal/anti-ideal points bounding the output space.
pub const SENTINEL: f64 = 1e20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpsilonMode {
    /// Per-objective proportion of the frontier's range.
    Heuristic,
    /// Maximum adjacent gap of the sorted per-objective coordinates (M=2 only).
    LowerBound,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct EpsilonConfig {
    pub mode: EpsilonMode,
    pub c: f64,
}

impl Default for EpsilonConfig {
    fn default() -> Self {
        EpsilonConfig { mode: EpsilonMode::Heuristic, c: 0.04 }
    }
}

/// Axis-aligned box over the M+C output coordinates; bounds may be sentinel
/// values. Membership is lower-exclusive, upper-inclusive, matching the
/// staircase complement of weak dominance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperbox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Hyperbox {
    pub fn contains(&self, point: &[f64]) -> bool {
        point
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(&f, (&lo, &hi))| f > lo && f <= hi)
    }
}

/// Disjoint boxes covering the feasible non-dominated output region of a
/// (shifted) discrete frontier.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoxPartition {
    pub boxes: Vec<Hyperbox>,
    pub num_objectives: usize,
    pub num_constraints: usize,
}

impl BoxPartition {
    pub fn contains(&self, point: &[f64]) -> bool {
        self.boxes.iter().any(|b| b.contains(point))
    }
}

/// Per-objective shift amounts for a frontier under the given config.
pub fn compute_epsilon(objectives: &[Vec<f64>], config: &EpsilonConfig) -> Result<Vec<f64>> {
    if objectives.is_empty() {
        return Err(Error::Config("epsilon shift requires a non-empty frontier".into()));
    }
    if config.c < 0.0 {
        return Err(Error::Config("epsilon proportion c must be non-negative".into()));
    }
    let m = objectives[0].len();
    match config.mode {
        EpsilonMode::Heuristic => Ok((0..m)
            .map(|k| {
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                for p in objectives {
                    lo = lo.min(p[k]);
                    hi = hi.max(p[k]);
                }
                config.c * (hi - lo)
            })
            .collect()),
        EpsilonMode::LowerBound => {
            if m != 2 {
                return Err(Error::Config("lower_bound epsilon is only defined for M = 2".into()));
            }
            if objectives.len() < 2 {
                return Err(Error::Config("lower_bound epsilon needs at least 2 frontier points".into()));
            }
            Ok((0..m)
                .map(|k| {
                    let mut coords: Vec<f64> = objectives.iter().map(|p| p[k]).collect();
                    coords.sort_by(f64::total_cmp);
                    coords.windows(2).map(|w| w[1] - w[0]).fold(0.0f64, f64::max)
                })
                .collect())
        }
    }
}

/// Shift every objective coordinate of the frontier by its epsilon;
/// constraints are left untouched.
pub fn shift_frontier(
    frontier: &ParetoFrontierSample,
    config: &EpsilonConfig,
) -> Result<ParetoFrontierSample> {
    let eps = compute_epsilon(&frontier.objectives, config)?;
    let mut shifted = frontier.clone();
    for p in &mut shifted.objectives {
        for (k, e) in eps.iter().enumerate() {
            p[k] += e;
        }
    }
    Ok(shifted)
}

/// Drop duplicates and weakly dominated points; returns points sorted by the
/// first objective descending (second ascending for M=2 staircases).
fn clean_frontier_2d(points: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| b[0].total_cmp(&a[0]).then(b[1].total_cmp(&a[1])));
    let mut out: Vec<Vec<f64>> = Vec::new();
    let mut best_f2 = f64::NEG_INFINITY;
    for p in pts {
        if p[1] > best_f2 {
            best_f2 = p[1];
            out.push(p);
        }
    }
    out
}

/// Staircase complement of the weakly dominated region for a clean 2-D
/// frontier; returns (lower, upper) pairs over the two objectives.
fn staircase_2d(clean: &[Vec<f64>]) -> Vec<(Vec<f64>, Vec<f64>)> {
    let n = clean.len();
    let mut boxes = Vec::with_capacity(n + 1);
    boxes.push((vec![clean[0][0], -SENTINEL], vec![SENTINEL, SENTINEL]));
    for i in 0..n {
        let next_f1 = if i + 1 < n { clean[i + 1][0] } else { -SENTINEL };
        boxes.push((vec![next_f1, clean[i][1]], vec![clean[i][0], SENTINEL]));
    }
    boxes
}

/// Partition the non-dominated region of output space for a mutually
/// non-dominated frontier with M objectives, then append the feasible
/// constraint slab [0, sentinel) on each of the C constraint coordinates.
pub fn decompose_non_dominated(
    objectives: &[Vec<f64>],
    num_objectives: usize,
    num_constraints: usize,
) -> Result<BoxPartition> {
    if objectives.is_empty() {
        return Err(Error::Config("decomposition requires a non-empty frontier".into()));
    }
    let obj_boxes: Vec<(Vec<f64>, Vec<f64>)> = match num_objectives {
        2 => staircase_2d(&clean_frontier_2d(objectives)),
        3 => decompose_3d(objectives),
        m => return Err(Error::UnsupportedDimension(m)),
    };

    let boxes = obj_boxes
        .into_iter()
        .map(|(mut lower, mut upper)| {
            lower.extend(std::iter::repeat(0.0).take(num_constraints));
            upper.extend(std::iter::repeat(SENTINEL).take(num_constraints));
            Hyperbox { lower, upper }
        })
        .collect();
    Ok(BoxPartition { boxes, num_objectives, num_constraints })
}

/// Slice along the third objective; each slab reduces to a 2-D staircase over
/// the points that can still dominate inside it.
fn decompose_3d(points: &[Vec<f64>]) -> Vec<(Vec<f64>, Vec<f64>)> {
    let mut levels: Vec<f64> = points.iter().map(|p| p[2]).collect();
    levels.sort_by(|a, b| b.total_cmp(a));
    levels.dedup();

    let mut boxes = Vec::new();
    let mut upper3 = SENTINEL;
    for (j, &level) in levels.iter().enumerate() {
        // slab (level, upper3]: dominators are points with p3 >= upper3
        let active: Vec<Vec<f64>> = points
            .iter()
            .filter(|p| p[2] >= upper3)
            .map(|p| vec![p[0], p[1]])
            .collect();
        emit_slab(&active, level, upper3, &mut boxes);
        upper3 = level;
        if j == levels.len() - 1 {
            let active: Vec<Vec<f64>> =
                points.iter().map(|p| vec![p[0], p[1]]).collect();
            emit_slab(&active, -SENTINEL, upper3, &mut boxes);
        }
    }
    boxes
}

fn emit_slab(active: &[Vec<f64>], lower3: f64, upper3: f64, out: &mut Vec<(Vec<f64>, Vec<f64>)>) {
    if active.is_empty() {
        out.push((vec![-SENTINEL, -SENTINEL, lower3], vec![SENTINEL, SENTINEL, upper3]));
        return;
    }
    for (mut lo, mut hi) in staircase_2d(&clean_frontier_2d(active)) {
        lo.push(lower3);
        hi.push(upper3);
        out.push((lo, hi));
    }
}

fn std_normal_cdf(z: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-z / std::f64::consts::SQRT_2)
}

fn std_normal_pdf(z: f64) -> f64 {
    (-(z * z) / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

fn cdf_at_bound(bound: f64, mean: f64, sigma: f64) -> f64 {
    if bound >= SENTINEL {
        1.0
    } else if bound <= -SENTINEL {
        0.0
    } else {
        std_normal_cdf((bound - mean) / sigma)
    }
}

/// Probability that independent Gaussians with the given marginal moments
/// land inside the box. Sentinel bounds resolve to CDF values of exactly 0/1;
/// a zero sigma degenerates to the indicator of the mean lying in the box.
pub fn box_probability(means: &[f64], sigmas: &[f64], hyperbox: &Hyperbox) -> f64 {
    let mut z = 1.0;
    for k in 0..means.len() {
        z *= box_factor(means[k], sigmas[k], hyperbox.lower[k], hyperbox.upper[k]);
        if z == 0.0 {
            return 0.0;
        }
    }
    z
}

fn box_factor(mean: f64, sigma: f64, lower: f64, upper: f64) -> f64 {
    if sigma == 0.0 {
        return if mean >= lower && mean <= upper { 1.0 } else { 0.0 };
    }
    (cdf_at_bound(upper, mean, sigma) - cdf_at_bound(lower, mean, sigma)).max(0.0)
}

/// Box probability together with its partials w.r.t. each mean and sigma.
pub fn box_probability_with_grad(
    means: &[f64],
    sigmas: &[f64],
    hyperbox: &Hyperbox,
) -> (f64, Vec<f64>, Vec<f64>) {
    let n = means.len();
    let mut factors = vec![0.0; n];
    let mut dmean = vec![0.0; n];
    let mut dsigma = vec![0.0; n];
    for k in 0..n {
        let (lo, hi) = (hyperbox.lower[k], hyperbox.upper[k]);
        factors[k] = box_factor(means[k], sigmas[k], lo, hi);
        if sigmas[k] > 0.0 {
            let (mut pdf_u, mut zu) = (0.0, 0.0);
            if hi.abs() < SENTINEL {
                zu = (hi - means[k]) / sigmas[k];
                pdf_u = std_normal_pdf(zu);
            }
            let (mut pdf_l, mut zl) = (0.0, 0.0);
            if lo.abs() < SENTINEL {
                zl = (lo - means[k]) / sigmas[k];
                pdf_l = std_normal_pdf(zl);
            }
            dmean[k] = (pdf_l - pdf_u) / sigmas[k];
            dsigma[k] = (pdf_l * zl - pdf_u * zu) / sigmas[k];
        }
    }
    // prefix/suffix products give the leave-one-out factors without division
    let mut prefix = vec![1.0; n + 1];
    for k in 0..n {
        prefix[k + 1] = prefix[k] * factors[k];
    }
    let mut suffix = vec![1.0; n + 1];
    for k in (0..n).rev() {
        suffix[k] = suffix[k + 1] * factors[k];
    }
    let z = prefix[n];
    let mut gm = vec![0.0; n];
    let mut gs = vec![0.0; n];
    for k in 0..n {
        let rest = prefix[k] * suffix[k + 1];
        gm[k] = rest * dmean[k];
        gs[k] = rest * dsigma[k];
    }
    (z, gm, gs)
}
