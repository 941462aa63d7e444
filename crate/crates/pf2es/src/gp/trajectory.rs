//! Random-feature trajectories: a prior sample from the Matern-5/2 spectral
//! representation plus an exact data correction through the cached Gram
//! factor, giving a cheap deterministic function that matches the posterior
//! in distribution.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};

use super::kernel::{normalize_rows, Matern52};
use super::IndependentGpSurrogate;
use crate::moo::MultiOutputFn;
use crate::problem::Bounds;

pub(crate) struct TrajectoryOutput {
    omega: DMatrix<f64>, // F x d frequencies in normalized input space
    phase: DVector<f64>,
    amplitude: f64,
    prior_weights: DVector<f64>,
    data_weights: DVector<f64>,
    kernel: Matern52,
    u_train: DMatrix<f64>,
    y_mean: f64,
    y_scale: f64,
}

impl TrajectoryOutput {
    fn features(&self, u: &DMatrix<f64>) -> DMatrix<f64> {
        let mut phi = u * self.omega.transpose(); // P x F
        for i in 0..phi.nrows() {
            for j in 0..phi.ncols() {
                phi[(i, j)] = self.amplitude * (phi[(i, j)] + self.phase[j]).cos();
            }
        }
        phi
    }

    fn eval(&self, u: &DMatrix<f64>) -> DVector<f64> {
        let phi = self.features(u);
        let prior = &phi * &self.prior_weights;
        let k_s = self.kernel.cross(u, &self.u_train);
        let corrected = prior + k_s * &self.data_weights;
        corrected.map(|v| self.y_mean + self.y_scale * v)
    }
}

/// A bundle of per-output trajectories, evaluable as a deterministic vector
/// function of the design variables.
pub struct TrajectorySample {
    outputs: Vec<TrajectoryOutput>,
    bounds: Bounds,
}

impl TrajectorySample {
    pub fn num_outputs(&self) -> usize {
        self.outputs.len()
    }

    /// Evaluate all outputs at a batch of raw input points.
    pub fn eval_points(&self, xs: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let u = normalize_rows(xs, &self.bounds);
        let per_output: Vec<DVector<f64>> = self.outputs.iter().map(|o| o.eval(&u)).collect();
        (0..xs.len())
            .map(|i| per_output.iter().map(|col| col[i]).collect())
            .collect()
    }
}

impl MultiOutputFn for TrajectorySample {
    fn eval_batch(&self, xs: &[Vec<f64>]) -> Vec<Vec<f64>> {
        self.eval_points(xs)
    }
}

pub(crate) fn sample(
    surrogate: &IndependentGpSurrogate,
    n_features: usize,
    seed: u64,
) -> TrajectorySample {
    assert!(n_features >= 64, "n_features must be at least 64");
    let d = surrogate.bounds.dim();
    let chi2 = ChiSquared::new(5.0).unwrap();

    let outputs = surrogate
        .models
        .iter()
        .enumerate()
        .map(|(idx, model)| {
            let mut rng =
                ChaCha12Rng::seed_from_u64(crate::derive_seed(seed, 9000 + idx as u64));
            let mut omega = DMatrix::zeros(n_features, d);
            for j in 0..n_features {
                let u_draw: f64 = chi2.sample(&mut rng);
                let scale = (5.0 / u_draw).sqrt();
                for t in 0..d {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    omega[(j, t)] = z * scale / model.kernel.lengthscales[t];
                }
            }
            let phase = DVector::from_iterator(
                n_features,
                (0..n_features).map(|_| rng.gen::<f64>() * 2.0 * std::f64::consts::PI),
            );
            let amplitude = (2.0 * model.kernel.signal_variance / n_features as f64).sqrt();
            let prior_weights = DVector::from_iterator(
                n_features,
                (0..n_features).map(|_| StandardNormal.sample(&mut rng)),
            );

            let mut output = TrajectoryOutput {
                omega,
                phase,
                amplitude,
                prior_weights,
                data_weights: DVector::zeros(model.u_train.nrows()),
                kernel: model.kernel.clone(),
                u_train: model.u_train.clone(),
                y_mean: model.y_mean,
                y_scale: model.y_scale,
            };
            // exact correction: residual of the prior draw at the training
            // inputs (with a noise draw) pulled through the Gram factor
            let phi_train = output.features(&model.u_train);
            let prior_at_train = &phi_train * &output.prior_weights;
            let noise_sd = model.noise_variance.sqrt();
            let eps = DVector::from_iterator(
                model.u_train.nrows(),
                (0..model.u_train.nrows()).map(|_| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    noise_sd * z
                }),
            );
            let residual = &model.y_std - prior_at_train - eps;
            output.data_weights = model.chol.solve(&residual);
            output
        })
        .collect();

    TrajectorySample { outputs, bounds: surrogate.bounds.clone() }
}
