//! Registry of synthetic and real-world test problems with their reference
//! points and ideal hypervolumes.
//!
//! Every problem is exposed in the maximization convention: objectives from
//! minimization sources are negated, constraints are slacks that are feasible
//! when non-negative. Reference points and ideal hypervolumes are registered
//! in the source (minimization) scale; `regret_ref_max` / `calibration_ref_max`
//! negate them to match the maximized objectives.

use std::f64::consts::{FRAC_PI_2, PI, SQRT_2};

use crate::error::{Error, Result};
use crate::problem::{Bounds, OutputVector, ProblemSpec};

/// A registered problem plus its evaluation-protocol reference data.
#[derive(Debug, Clone)]
pub struct BenchmarkProblem {
    pub spec: ProblemSpec,
    /// Reference point for the regret metric, source (minimization) scale.
    pub regret_ref: Vec<f64>,
    pub ideal_hypervolume: f64,
    /// Reference point for the uncertainty-calibration metric, where given.
    pub calibration_ref: Option<Vec<f64>>,
}

impl BenchmarkProblem {
    pub fn name(&self) -> &str {
        &self.spec.name
    }

    /// Regret reference point in the maximization scale.
    pub fn regret_ref_max(&self) -> Vec<f64> {
        self.regret_ref.iter().map(|v| -v).collect()
    }

    pub fn calibration_ref_max(&self) -> Option<Vec<f64>> {
        self.calibration_ref.as_ref().map(|r| r.iter().map(|v| -v).collect())
    }
}

pub const PROBLEM_NAMES: [&str; 10] = [
    "vlmop2",
    "branincurrin",
    "zdt1",
    "zdt2",
    "fourbartruss",
    "c-branincurrin",
    "constr-ex",
    "srn",
    "c2-dtlz2",
    "discbrake",
];

fn canonical(name: &str) -> String {
    name.to_lowercase().replace(['_', ' '], "-")
}

/// Look up a benchmark by name (case-insensitive; '-' and '_' equivalent).
pub fn benchmark(name: &str) -> Result<BenchmarkProblem> {
    let key = canonical(name);
    match key.as_str() {
        "vlmop2" => Ok(vlmop2()),
        "branincurrin" => Ok(branincurrin()),
        "zdt1" => Ok(zdt(1)),
        "zdt2" => Ok(zdt(2)),
        "fourbartruss" | "four-bar-truss" => Ok(four_bar_truss()),
        "c-branincurrin" | "cbranincurrin" => Ok(c_branincurrin()),
        "constr-ex" | "constrex" => Ok(constr_ex()),
        "srn" => Ok(srn()),
        "c2-dtlz2" | "c2dtlz2" => Ok(c2_dtlz2()),
        "discbrake" | "disc-brake" => Ok(disc_brake()),
        _ => Err(Error::UnknownProblem(name.to_string())),
    }
}

/// Evaluate a registered benchmark at a point.
pub fn evaluate_benchmark(name: &str, x: &[f64]) -> Result<OutputVector> {
    let b = benchmark(name)?;
    if !b.spec.bounds.contains(x) {
        return Err(Error::Config(format!("point outside the {name} domain")));
    }
    Ok(b.spec.evaluate(x))
}

fn vlmop2() -> BenchmarkProblem {
    let spec = ProblemSpec::new(
        "vlmop2",
        Bounds::new(vec![(-2.0, 2.0); 2]).unwrap(),
        2,
        0,
        |x: &[f64]| {
            let a = 1.0 / SQRT_2;
            let s1: f64 = x.iter().map(|&xi| (xi - a) * (xi - a)).sum();
            let s2: f64 = x.iter().map(|&xi| (xi + a) * (xi + a)).sum();
            vec![-(1.0 - (-s1).exp()), -(1.0 - (-s2).exp())]
        },
    )
    .unwrap();
    BenchmarkProblem {
        spec,
        regret_ref: vec![1.2, 1.2],
        ideal_hypervolume: 0.77157,
        calibration_ref: Some(vec![3.0, 3.0]),
    }
}

fn branin_scaled(u: f64, v: f64) -> f64 {
    let term = v - 5.1 * u * u / (4.0 * PI * PI) + 5.0 * u / PI - 6.0;
    term * term + 10.0 * (1.0 - 1.0 / (8.0 * PI)) * u.cos() + 10.0
}

fn currin(x1: f64, x2: f64) -> f64 {
    let factor = if x2 == 0.0 { 1.0 } else { 1.0 - (-1.0 / (2.0 * x2)).exp() };
    let num = 2300.0 * x1.powi(3) + 1900.0 * x1 * x1 + 2092.0 * x1 + 60.0;
    let den = 100.0 * x1.powi(3) + 500.0 * x1 * x1 + 4.0 * x1 + 20.0;
    factor * num / den
}

fn branincurrin() -> BenchmarkProblem {
    let spec = ProblemSpec::new(
        "branincurrin",
        Bounds::new(vec![(0.0, 1.0); 2]).unwrap(),
        2,
        0,
        |x: &[f64]| {
            let (u, v) = (15.0 * x[0] - 5.0, 15.0 * x[1]);
            vec![-branin_scaled(u, v), -currin(x[0], x[1])]
        },
    )
    .unwrap();
    BenchmarkProblem {
        spec,
        regret_ref: vec![18.0, 6.0],
        ideal_hypervolume: 60.0,
        calibration_ref: Some(vec![2000.0, 50.0]),
    }
}

fn c_branincurrin() -> BenchmarkProblem {
    let spec = ProblemSpec::new(
        "c-branincurrin",
        Bounds::new(vec![(0.0, 1.0); 2]).unwrap(),
        2,
        1,
        |x: &[f64]| {
            let (u, v) = (15.0 * x[0] - 5.0, 15.0 * x[1]);
            vec![
                -branin_scaled(u, v),
                -currin(x[0], x[1]),
                50.0 - (u - 2.5) * (u - 2.5) - (v - 7.5) * (v - 7.5),
            ]
        },
    )
    .unwrap();
    BenchmarkProblem {
        spec,
        regret_ref: vec![80.0, 12.0],
        ideal_hypervolume: 606.752,
        calibration_ref: Some(vec![2000.0, 100.0]),
    }
}

fn zdt(which: u8) -> BenchmarkProblem {
    let name = if which == 1 { "zdt1" } else { "zdt2" };
    let spec = ProblemSpec::new(
        name,
        Bounds::new(vec![(0.0, 1.0); 5]).unwrap(),
        2,
        0,
        move |x: &[f64]| {
            let d = x.len() as f64;
            let f1 = x[0];
            let g = 1.0 + 9.0 * x[1..].iter().sum::<f64>() / (d - 1.0);
            let f2 = if which == 1 {
                g * (1.0 - (f1 / g).sqrt())
            } else {
                g * (1.0 - (f1 / g) * (f1 / g))
            };
            vec![-f1, -f2]
        },
    )
    .unwrap();
    BenchmarkProblem {
        spec,
        regret_ref: vec![2.5, 2.5],
        ideal_hypervolume: if which == 1 { 5.90453 } else { 5.57236 },
        calibration_ref: Some(vec![15.0, 15.0]),
    }
}

fn four_bar_truss() -> BenchmarkProblem {
    // truss sizing: structural volume against joint displacement
    let spec = ProblemSpec::new(
        "fourbartruss",
        Bounds::new(vec![(1.0, 3.0), (SQRT_2, 3.0), (SQRT_2, 3.0), (1.0, 3.0)]).unwrap(),
        2,
        0,
        |x: &[f64]| {
            let (force, modulus, length) = (10.0, 2e5, 200.0);
            let f1 = length * (2.0 * x[0] + SQRT_2 * x[1] + x[2].sqrt() + x[3]);
            let f2 = (force * length / modulus)
                * (2.0 / x[0] + 2.0 * SQRT_2 / x[1] - 2.0 * SQRT_2 / x[2] + 2.0 / x[3]);
            vec![-f1, -f2]
        },
    )
    .unwrap();
    BenchmarkProblem {
        spec,
        regret_ref: vec![3400.0, 0.05],
        ideal_hypervolume: 81.959,
        calibration_ref: None,
    }
}

fn constr_ex() -> BenchmarkProblem {
    let spec = ProblemSpec::new(
        "constr-ex",
        Bounds::new(vec![(0.1, 1.0), (0.0, 5.0)]).unwrap(),
        2,
        2,
        |x: &[f64]| {
            vec![
                -x[0],
                -((1.0 + x[1]) / x[0]),
                x[1] + 9.0 * x[0] - 6.0,
                -x[1] + 9.0 * x[0] - 1.0,
            ]
        },
    )
    .unwrap();
    BenchmarkProblem {
        spec,
        regret_ref: vec![1.1, 10.0],
        ideal_hypervolume: 5.30186,
        calibration_ref: Some(vec![2.0, 50.0]),
    }
}

fn srn() -> BenchmarkProblem {
    let spec = ProblemSpec::new(
        "srn",
        Bounds::new(vec![(-20.0, 20.0); 2]).unwrap(),
        2,
        2,
        |x: &[f64]| {
            let f1 = 2.0 + (x[0] - 2.0) * (x[0] - 2.0) + (x[1] - 1.0) * (x[1] - 1.0);
            let f2 = 9.0 * x[0] - (x[1] - 1.0) * (x[1] - 1.0);
            vec![
                -f1,
                -f2,
                225.0 - x[0] * x[0] - x[1] * x[1],
                3.0 * x[1] - x[0] - 10.0,
            ]
        },
    )
    .unwrap();
    BenchmarkProblem {
        spec,
        regret_ref: vec![250.0, 50.0],
        ideal_hypervolume: 46205.0,
        calibration_ref: Some(vec![1500.0, 500.0]),
    }
}

fn c2_dtlz2() -> BenchmarkProblem {
    // two-objective variant; the feasible region keeps three disjoint arcs of
    // the unit-circle front (radius 0.2 around each extreme and the center)
    let spec = ProblemSpec::new(
        "c2-dtlz2",
        Bounds::new(vec![(0.0, 1.0); 4]).unwrap(),
        2,
        1,
        |x: &[f64]| {
            let r = 0.2;
            let g: f64 = x[1..].iter().map(|&xi| (xi - 0.5) * (xi - 0.5)).sum();
            let f1 = (1.0 + g) * (x[0] * FRAC_PI_2).cos();
            let f2 = (1.0 + g) * (x[0] * FRAC_PI_2).sin();
            let corner = ((f1 - 1.0) * (f1 - 1.0) + f2 * f2)
                .min((f2 - 1.0) * (f2 - 1.0) + f1 * f1)
                - r * r;
            let center = (f1 - 1.0 / SQRT_2).powi(2) + (f2 - 1.0 / SQRT_2).powi(2) - r * r;
            vec![-f1, -f2, -corner.min(center)]
        },
    )
    .unwrap();
    BenchmarkProblem {
        spec,
        regret_ref: vec![2.5, 2.5],
        ideal_hypervolume: 5.43594,
        calibration_ref: Some(vec![10.0, 250.0]),
    }
}

fn disc_brake() -> BenchmarkProblem {
    // inner/outer disc radii, engaging force, friction-surface count;
    // objectives are brake mass and stopping time
    let spec = ProblemSpec::new(
        "discbrake",
        Bounds::new(vec![(55.0, 80.0), (75.0, 110.0), (1000.0, 3000.0), (11.0, 20.0)]).unwrap(),
        2,
        4,
        |x: &[f64]| {
            let (x1, x2, x3, x4) = (x[0], x[1], x[2], x[3]);
            let ring = x2 * x2 - x1 * x1;
            let cubes = x2 * x2 * x2 - x1 * x1 * x1;
            let f1 = 4.9e-5 * ring * (x4 - 1.0);
            let f2 = 9.82e6 * ring / (x3 * x4 * cubes);
            vec![
                -f1,
                -f2,
                (x2 - x1) - 20.0,
                0.4 - x3 / (3.14 * ring),
                1.0 - (2.22e-3 * x3 * cubes) / (ring * ring),
                (2.66e-2 * x3 * x4 * cubes) / ring - 900.0,
            ]
        },
    )
    .unwrap();
    BenchmarkProblem {
        spec,
        regret_ref: vec![8.0, 4.0],
        ideal_hypervolume: 17.6882,
        calibration_ref: None,
    }
}
