//! Bayesian logistic regression with a Gaussian prior and an appended bias feature.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::Target;
use crate::error::{invalid, Error, Result};
use crate::linalg::{cholesky_solve, dot, Matrix};
use crate::rng::RngStream;

#[inline]
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + libm::exp(-z))
    } else {
        let e = libm::exp(z);
        e / (1.0 + e)
    }
}

/// `log σ(z)` without overflow for large `|z|`.
#[inline]
pub fn log_sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        -libm::log1p(libm::exp(-z))
    } else {
        z - libm::log1p(libm::exp(z))
    }
}

/// Per-feature affine map applied at load time.
#[derive(Clone, Debug, PartialEq)]
pub struct Standardization {
    pub means: Vec<f64>,
    pub scales: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LogisticRegressionData {
    /// `N × d` features.
    pub features: Matrix,
    /// Labels in `{-1, +1}`.
    pub labels: Vec<f64>,
    pub prior_variance: f64,
    pub standardization: Option<Standardization>,
}

impl LogisticRegressionData {
    pub fn new(features: Matrix, labels: Vec<f64>, prior_variance: f64) -> Result<Self> {
        if features.rows() == 0 {
            return Err(Error::EmptyDataset);
        }
        if labels.len() != features.rows() {
            return Err(Error::DimensionMismatch {
                expected: features.rows(),
                found: labels.len(),
            });
        }
        if let Some(bad) = labels.iter().find(|y| **y != 1.0 && **y != -1.0) {
            return Err(invalid("labels", format!("must be -1 or +1, found {bad}")));
        }
        if !features.all_finite() {
            return Err(invalid("features", "must be finite"));
        }
        if !(prior_variance > 0.0 && prior_variance.is_finite()) {
            return Err(invalid("prior_variance", "must be positive"));
        }
        Ok(Self {
            features,
            labels,
            prior_variance,
            standardization: None,
        })
    }

    pub fn len(&self) -> usize {
        self.features.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn feature_dim(&self) -> usize {
        self.features.cols()
    }

    /// Rows `rows` of the dataset, in the order given.
    pub fn subset(&self, rows: &[usize]) -> Result<Self> {
        let picked: Vec<&[f64]> = rows.iter().map(|&i| self.features.row(i)).collect();
        let mut out = Self::new(
            Matrix::from_rows(&picked)?,
            rows.iter().map(|&i| self.labels[i]).collect(),
            self.prior_variance,
        )?;
        out.standardization = self.standardization.clone();
        Ok(out)
    }

    /// First `train` rows and the remainder.
    pub fn split(&self, train: usize) -> Result<(Self, Self)> {
        let n = self.len();
        if train == 0 || train >= n {
            return Err(invalid("train", format!("must lie in 1..{n}")));
        }
        let first: Vec<usize> = (0..train).collect();
        let rest: Vec<usize> = (train..n).collect();
        Ok((self.subset(&first)?, self.subset(&rest)?))
    }

    /// Standardizes every feature to zero mean and unit variance (scale 1 for constant columns).
    pub fn standardize(&mut self) {
        let stats = column_stats(&self.features);
        self.apply(&stats);
        self.standardization = Some(stats);
    }

    pub fn apply(&mut self, stats: &Standardization) {
        let d = self.feature_dim();
        for i in 0..self.len() {
            let row = self.features.row_mut(i);
            for j in 0..d {
                row[j] = (row[j] - stats.means[j]) / stats.scales[j];
            }
        }
    }
}

fn column_stats(x: &Matrix) -> Standardization {
    let n = x.rows() as f64;
    let d = x.cols();
    let mut means = vec![0.0; d];
    for row in x.iter_rows() {
        for (m, v) in means.iter_mut().zip(row) {
            *m += v / n;
        }
    }
    let mut vars = vec![0.0; d];
    for row in x.iter_rows() {
        for ((s, v), m) in vars.iter_mut().zip(row).zip(&means) {
            *s += (v - m) * (v - m) / n;
        }
    }
    let scales = vars
        .into_iter()
        .map(|v| {
            let s = libm::sqrt(v);
            if s > 0.0 {
                s
            } else {
                1.0
            }
        })
        .collect();
    Standardization { means, scales }
}

/// Two unit-covariance Gaussian clouds at `±separation/2` along a random
/// direction; the label of each point is the sign of its cloud.
pub fn synth_logreg(
    n: usize,
    d: usize,
    separation: f64,
    rng: &mut RngStream,
) -> Result<LogisticRegressionData> {
    if n == 0 || d == 0 {
        return Err(invalid("n, d", "must both be at least 1"));
    }
    let mut direction: Vec<f64> = (0..d).map(|_| rng.standard_normal()).collect();
    let len = libm::sqrt(dot(&direction, &direction));
    direction.iter_mut().for_each(|x| *x /= len);
    let mut features = Matrix::zeros(n, d);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let y = if rng.uniform() < 0.5 { -1.0 } else { 1.0 };
        labels.push(y);
        for (j, x) in features.row_mut(i).iter_mut().enumerate() {
            *x = y * 0.5 * separation * direction[j] + rng.standard_normal();
        }
    }
    LogisticRegressionData::new(features, labels, 1.0)
}

/// Posterior `U(θ) = Σ log σ(yᵢ x̃ᵢ·θ) - ‖θ‖²/(2σ²)` over `x̃ᵢ = [xᵢ, 1]`.
#[derive(Clone, Debug)]
pub struct LogisticRegression {
    data: LogisticRegressionData,
    bias: bool,
}

impl LogisticRegression {
    pub fn new(data: LogisticRegressionData) -> Self {
        Self { data, bias: true }
    }

    pub fn without_bias(data: LogisticRegressionData) -> Self {
        Self { data, bias: false }
    }

    pub fn data(&self) -> &LogisticRegressionData {
        &self.data
    }

    pub fn has_bias(&self) -> bool {
        self.bias
    }

    /// `x̃·θ` for feature row `x`.
    #[inline]
    pub fn logit(&self, x: &[f64], theta: &[f64]) -> f64 {
        let d = x.len();
        let mut z = dot(x, &theta[..d]);
        if self.bias {
            z += theta[d];
        }
        z
    }

    /// `P(y = +1 | x, θ)`.
    pub fn predict_prob(&self, x: &[f64], theta: &[f64]) -> f64 {
        sigmoid(self.logit(x, theta))
    }

    /// Sum of per-observation log-likelihoods (no prior).
    pub fn log_likelihood(&self, theta: &[f64]) -> f64 {
        (0..self.data.len())
            .map(|i| log_sigmoid(self.data.labels[i] * self.logit(self.data.features.row(i), theta)))
            .sum()
    }

    fn check_dims(&self, theta: &[f64]) {
        debug_assert_eq!(theta.len(), self.dim());
    }

    fn add_data_term(&self, theta: &[f64], i: usize, scale: f64, out: &mut [f64]) {
        let x = self.data.features.row(i);
        let y = self.data.labels[i];
        // d/dθ log σ(y z) = y σ(-y z) x̃
        let w = scale * y * sigmoid(-y * self.logit(x, theta));
        let d = x.len();
        for (o, xv) in out[..d].iter_mut().zip(x) {
            *o += w * xv;
        }
        if self.bias {
            out[d] += w;
        }
    }

    fn prior_grad(&self, theta: &[f64], out: &mut [f64]) {
        let inv = 1.0 / self.data.prior_variance;
        for (o, t) in out.iter_mut().zip(theta) {
            *o = -t * inv;
        }
    }

    /// Minibatch estimate with an explicit batch-size check against `N`.
    pub fn checked_stochastic_grad(&self, theta: &[f64], batch: &[usize], out: &mut [f64]) -> Result<()> {
        if batch.is_empty() || batch.len() > self.data.len() {
            return Err(Error::MinibatchTooLarge {
                requested: batch.len(),
                available: self.data.len(),
            });
        }
        self.stochastic_grad(theta, batch, out);
        Ok(())
    }

    /// Newton's method with backtracking on the (strictly concave) log posterior.
    pub fn map_estimate(&self, max_iter: usize, tol: f64) -> Result<Vec<f64>> {
        let p = self.dim();
        let mut theta = vec![0.0; p];
        let mut grad = vec![0.0; p];
        for _ in 0..max_iter {
            self.grad_log_density(&theta, &mut grad);
            let mut neg_hess = Matrix::zeros(p, p);
            for k in 0..p {
                neg_hess.set(k, k, 1.0 / self.data.prior_variance);
            }
            let mut xt = vec![0.0; p];
            for i in 0..self.data.len() {
                let x = self.data.features.row(i);
                xt[..x.len()].copy_from_slice(x);
                if self.bias {
                    xt[x.len()] = 1.0;
                }
                let s = sigmoid(dot(&xt, &theta));
                let w = s * (1.0 - s);
                for a in 0..p {
                    let wa = w * xt[a];
                    for b in 0..p {
                        let v = neg_hess.get(a, b) + wa * xt[b];
                        neg_hess.set(a, b, v);
                    }
                }
            }
            let delta = cholesky_solve(&neg_hess, &grad)?;
            let current = self.log_density(&theta);
            let mut t = 1.0;
            let mut next = theta.clone();
            loop {
                for ((n, th), dl) in next.iter_mut().zip(&theta).zip(&delta) {
                    *n = th + t * dl;
                }
                if self.log_density(&next) >= current || t < 1e-10 {
                    break;
                }
                t *= 0.5;
            }
            let step = libm::sqrt(dot(&delta, &delta)) * t;
            theta = next;
            if step < tol {
                break;
            }
        }
        Ok(theta)
    }
}

impl Target for LogisticRegression {
    fn dim(&self) -> usize {
        self.data.feature_dim() + usize::from(self.bias)
    }

    fn log_density(&self, theta: &[f64]) -> f64 {
        self.check_dims(theta);
        self.log_likelihood(theta) - dot(theta, theta) / (2.0 * self.data.prior_variance)
    }

    fn grad_log_density(&self, theta: &[f64], out: &mut [f64]) {
        self.check_dims(theta);
        self.prior_grad(theta, out);
        for i in 0..self.data.len() {
            self.add_data_term(theta, i, 1.0, out);
        }
    }

    fn data_len(&self) -> Option<usize> {
        Some(self.data.len())
    }

    /// `∇log p(θ) + (N/n) Σ_{i ∈ batch} ∇log p(xᵢ|θ)`.
    fn stochastic_grad(&self, theta: &[f64], batch: &[usize], out: &mut [f64]) {
        self.check_dims(theta);
        self.prior_grad(theta, out);
        let scale = self.data.len() as f64 / batch.len() as f64;
        for &i in batch {
            self.add_data_term(theta, i, scale, out);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> LogisticRegressionData {
        let x = Matrix::from_rows(&[
            [0.5, -1.0],
            [1.5, 0.3],
            [-0.2, 0.8],
            [2.0, -0.7],
            [-1.1, -0.4],
        ])
        .unwrap();
        LogisticRegressionData::new(x, vec![1.0, -1.0, 1.0, 1.0, -1.0], 1.0).unwrap()
    }

    #[test]
    fn zero_parameters_give_half_likelihood() {
        let model = LogisticRegression::new(tiny());
        let ll = model.log_likelihood(&[0.0; 3]);
        assert!((ll - 5.0 * libm::log(0.5)).abs() < 1e-14);
    }

    #[test]
    fn sigmoid_helpers_are_stable() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!((sigmoid(3.0) + sigmoid(-3.0) - 1.0).abs() <= f64::EPSILON);
        assert!(log_sigmoid(-800.0).is_finite());
        assert!((log_sigmoid(800.0)).abs() < 1e-300);
    }

    #[test]
    fn exhaustive_minibatch_average_equals_full_gradient() {
        let model = LogisticRegression::new(tiny());
        let theta = [0.3, -0.8, 0.25];
        let mut full = [0.0; 3];
        model.grad_log_density(&theta, &mut full);
        let mut avg = [0.0; 3];
        let mut count = 0.0;
        let mut g = [0.0; 3];
        for a in 0..5 {
            for b in a + 1..5 {
                model.stochastic_grad(&theta, &[a, b], &mut g);
                for k in 0..3 {
                    avg[k] += g[k];
                }
                count += 1.0;
            }
        }
        assert_eq!(count, 10.0);
        for k in 0..3 {
            let a = avg[k] / count;
            assert!((a - full[k]).abs() <= 1e-14 * full[k].abs().max(1.0), "{a} vs {}", full[k]);
        }
    }

    #[test]
    fn full_batch_equals_exact_gradient() {
        let model = LogisticRegression::new(tiny());
        let theta = [-0.4, 0.9, 0.1];
        let (mut a, mut b) = ([0.0; 3], [0.0; 3]);
        model.grad_log_density(&theta, &mut a);
        model.stochastic_grad(&theta, &[0, 1, 2, 3, 4], &mut b);
        assert_eq!(a, b);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = RngStream::new(21);
        let data = synth_logreg(50, 4, 2.0, &mut rng).unwrap();
        let model = LogisticRegression::new(data);
        for _ in 0..20 {
            let theta: Vec<f64> = (0..5).map(|_| rng.standard_normal()).collect();
            let mut g = vec![0.0; 5];
            model.grad_log_density(&theta, &mut g);
            for d in 0..5 {
                let eps = 1e-5 * theta[d].abs().max(1.0);
                let mut p = theta.clone();
                let mut m = theta.clone();
                p[d] += eps;
                m[d] -= eps;
                let fd = (model.log_density(&p) - model.log_density(&m)) / (2.0 * eps);
                assert!((fd - g[d]).abs() / (g[d].abs() + 1e-12) < 1e-5);
            }
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        assert_eq!(
            LogisticRegressionData::new(Matrix::zeros(0, 2), vec![], 1.0),
            Err(Error::EmptyDataset)
        );
        assert!(LogisticRegressionData::new(Matrix::zeros(1, 2), vec![2.0], 1.0).is_err());
        let model = LogisticRegression::new(tiny());
        let mut g = [0.0; 3];
        assert!(model
            .checked_stochastic_grad(&[0.0; 3], &[0, 1, 2, 3, 4, 0], &mut g)
            .is_err());
    }

    #[test]
    fn synthetic_data_is_deterministic() {
        let a = synth_logreg(30, 3, 4.0, &mut RngStream::new(5)).unwrap();
        let b = synth_logreg(30, 3, 4.0, &mut RngStream::new(5)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_separation_carries_no_signal() {
        // labels are drawn independently of the features, so the class-conditional
        // means coincide up to sampling noise
        let data = synth_logreg(20_000, 2, 0.0, &mut RngStream::new(6)).unwrap();
        let mut diff = [0.0; 2];
        let (mut pos, mut neg) = (0.0f64, 0.0f64);
        for i in 0..data.len() {
            let y = data.labels[i];
            if y > 0.0 {
                pos += 1.0;
            } else {
                neg += 1.0;
            }
            for k in 0..2 {
                diff[k] += data.features.get(i, k) * if y > 0.0 { 1.0 } else { -1.0 };
            }
        }
        assert!((pos / (pos + neg) - 0.5).abs() < 0.02);
        assert!(diff[0].abs() / 20_000.0 < 0.05 && diff[1].abs() / 20_000.0 < 0.05);
    }

    #[test]
    fn map_reaches_high_accuracy_on_separated_clouds() {
        let data = synth_logreg(1000, 2, 10.0, &mut RngStream::new(7)).unwrap();
        let model = LogisticRegression::new(data);
        let theta = model.map_estimate(50, 1e-10).unwrap();
        let data = model.data();
        let correct = (0..data.len())
            .filter(|&i| (model.predict_prob(data.features.row(i), &theta) >= 0.5) == (data.labels[i] > 0.0))
            .count();
        assert!(correct as f64 / data.len() as f64 >= 0.99);
    }

    #[test]
    fn standardization_is_recorded() {
        let mut data = tiny();
        data.standardize();
        let stats = data.standardization.clone().unwrap();
        assert_eq!(stats.means.len(), 2);
        let col0: f64 = (0..5).map(|i| data.features.get(i, 0)).sum();
        assert!(col0.abs() < 1e-12);
    }
}
