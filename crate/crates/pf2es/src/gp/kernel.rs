//! Matern-5/2 ARD kernel over normalized inputs.

use nalgebra::DMatrix;

const SQRT5: f64 = 2.23606797749978969;

#[derive(Debug, Clone)]
pub struct Matern52 {
    pub signal_variance: f64,
    pub lengthscales: Vec<f64>,
}

impl Matern52 {
    pub fn dim(&self) -> usize {
        self.lengthscales.len()
    }

    fn scaled_r(&self, a: &[f64], b: &[f64]) -> f64 {
        let mut r2 = 0.0;
        for i in 0..a.len() {
            let d = (a[i] - b[i]) / self.lengthscales[i];
            r2 += d * d;
        }
        r2.sqrt()
    }

    pub fn k(&self, a: &[f64], b: &[f64]) -> f64 {
        let r = self.scaled_r(a, b);
        self.signal_variance * (1.0 + SQRT5 * r + 5.0 / 3.0 * r * r) * (-SQRT5 * r).exp()
    }

    /// Gram matrix over the rows of `u` (no noise term).
    pub fn gram(&self, u: &DMatrix<f64>) -> DMatrix<f64> {
        let n = u.nrows();
        let mut k = DMatrix::zeros(n, n);
        for i in 0..n {
            k[(i, i)] = self.signal_variance;
            for j in 0..i {
                let v = self.k(u.row(i).transpose().as_slice(), u.row(j).transpose().as_slice());
                k[(i, j)] = v;
                k[(j, i)] = v;
            }
        }
        k
    }

    /// Cross-covariance between rows of `a` (P) and rows of `b` (N).
    pub fn cross(&self, a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
        let mut k = DMatrix::zeros(a.nrows(), b.nrows());
        for i in 0..a.nrows() {
            for j in 0..b.nrows() {
                k[(i, j)] =
                    self.k(a.row(i).transpose().as_slice(), b.row(j).transpose().as_slice());
            }
        }
        k
    }

    /// Gradient of k(a, b) w.r.t. the coordinates of `a`.
    pub fn grad_a(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        let r = self.scaled_r(a, b);
        let common = -(5.0 / 3.0) * self.signal_variance * (1.0 + SQRT5 * r) * (-SQRT5 * r).exp();
        (0..a.len())
            .map(|i| {
                let delta = (a[i] - b[i]) / self.lengthscales[i];
                common * delta / self.lengthscales[i]
            })
            .collect()
    }

    /// d k(a,b) / d ln(lengthscale_i).
    pub fn dk_dlog_lengthscale(&self, a: &[f64], b: &[f64], i: usize) -> f64 {
        let r = self.scaled_r(a, b);
        let delta = (a[i] - b[i]) / self.lengthscales[i];
        (5.0 / 3.0) * self.signal_variance * (1.0 + SQRT5 * r) * (-SQRT5 * r).exp() * delta * delta
    }

    /// Per-parameter gradient matrices of the Gram matrix in log space:
    /// one matrix per ln(lengthscale_i) followed by one for ln(signal variance).
    pub fn gram_log_grads(&self, u: &DMatrix<f64>, gram_no_noise: &DMatrix<f64>) -> Vec<DMatrix<f64>> {
        let n = u.nrows();
        let d = self.dim();
        let mut grads = vec![DMatrix::zeros(n, n); d + 1];
        for i in 0..n {
            for j in 0..i {
                let a = u.row(i).transpose();
                let b = u.row(j).transpose();
                for t in 0..d {
                    let g = self.dk_dlog_lengthscale(a.as_slice(), b.as_slice(), t);
                    grads[t][(i, j)] = g;
                    grads[t][(j, i)] = g;
                }
            }
        }
        grads[d] = gram_no_noise.clone();
        grads
    }
}

pub fn normalize_rows(points: &[Vec<f64>], bounds: &crate::problem::Bounds) -> DMatrix<f64> {
    let d = bounds.dim();
    let mut m = DMatrix::zeros(points.len(), d);
    for (i, p) in points.iter().enumerate() {
        for j in 0..d {
            m[(i, j)] = (p[j] - bounds.lower(j)) / bounds.width(j);
        }
    }
    m
}
