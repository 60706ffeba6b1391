use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use super::{ExactSampler, Target};
use crate::error::{invalid, Error, Result};
use crate::linalg::{log_sum_exp, Matrix};
use crate::rng::RngStream;

/// Mixture of axis-aligned Gaussians.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianMixtureSpec {
    /// `K × r` component means.
    pub means: Matrix,
    /// `K × r` per-coordinate variances.
    pub variances: Matrix,
    /// Mixture weights on the `K`-simplex.
    pub weights: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct GaussianMixture {
    spec: GaussianMixtureSpec,
    log_norms: Vec<f64>,
    cumulative: Vec<f64>,
}

impl GaussianMixture {
    pub fn new(spec: GaussianMixtureSpec) -> Result<Self> {
        let k = spec.weights.len();
        if k == 0 {
            return Err(invalid("weights", "mixture needs at least one component"));
        }
        if spec.means.rows() != k || spec.variances.rows() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                found: spec.means.rows().min(spec.variances.rows()),
            });
        }
        if spec.means.cols() != spec.variances.cols() || spec.means.cols() == 0 {
            return Err(Error::DimensionMismatch {
                expected: spec.means.cols(),
                found: spec.variances.cols(),
            });
        }
        if !spec.means.all_finite() {
            return Err(invalid("means", "must be finite"));
        }
        if spec
            .variances
            .as_slice()
            .iter()
            .any(|v| !(*v > 0.0 && v.is_finite()))
        {
            return Err(invalid("variances", "must be strictly positive"));
        }
        if spec.weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(invalid("weights", "must be nonnegative"));
        }
        let total: f64 = spec.weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(invalid("weights", format!("must sum to 1, got {total}")));
        }
        let r = spec.means.cols() as f64;
        let log_norms = (0..k)
            .map(|c| {
                let log_det: f64 = spec.variances.row(c).iter().map(|v| libm::log(*v)).sum();
                libm::log(spec.weights[c]) - 0.5 * (r * libm::log(2.0 * PI) + log_det)
            })
            .collect();
        let mut acc = 0.0;
        let cumulative = spec
            .weights
            .iter()
            .map(|w| {
                acc += w;
                acc
            })
            .collect();
        Ok(Self {
            spec,
            log_norms,
            cumulative,
        })
    }

    /// Equal-weight mixture of isotropic components sharing one standard deviation.
    pub fn isotropic(centers: &[&[f64]], std_dev: f64) -> Result<Self> {
        let k = centers.len();
        let means = Matrix::from_rows(centers)?;
        let var = std_dev * std_dev;
        let variances = Matrix::from_vec(k, means.cols(), vec![var; k * means.cols()])?;
        Self::new(GaussianMixtureSpec {
            means,
            variances,
            weights: vec![1.0 / k as f64; k],
        })
    }

    /// `N(0, I_dim)`.
    pub fn standard(dim: usize) -> Result<Self> {
        let zero = vec![0.0; dim];
        Self::isotropic(&[&zero], 1.0)
    }

    pub fn spec(&self) -> &GaussianMixtureSpec {
        &self.spec
    }

    pub fn components(&self) -> usize {
        self.spec.weights.len()
    }

    fn component_log_densities(&self, theta: &[f64]) -> Vec<f64> {
        (0..self.components())
            .map(|c| {
                let mean = self.spec.means.row(c);
                let var = self.spec.variances.row(c);
                let quad: f64 = theta
                    .iter()
                    .zip(mean)
                    .zip(var)
                    .map(|((t, m), v)| (t - m) * (t - m) / v)
                    .sum();
                self.log_norms[c] - 0.5 * quad
            })
            .collect()
    }

    /// Normalized log-density (log-sum-exp over components).
    pub fn log_pdf(&self, theta: &[f64]) -> f64 {
        log_sum_exp(&self.component_log_densities(theta))
    }

    pub fn grad_log_pdf(&self, theta: &[f64], out: &mut [f64]) {
        let logs = self.component_log_densities(theta);
        let total = log_sum_exp(&logs);
        out.iter_mut().for_each(|o| *o = 0.0);
        for (c, l) in logs.iter().enumerate() {
            let resp = libm::exp(l - total);
            let mean = self.spec.means.row(c);
            let var = self.spec.variances.row(c);
            for (((o, t), m), v) in out.iter_mut().zip(theta).zip(mean).zip(var) {
                *o -= resp * (t - m) / v;
            }
        }
    }
}

impl Target for GaussianMixture {
    fn dim(&self) -> usize {
        self.spec.means.cols()
    }

    fn log_density(&self, theta: &[f64]) -> f64 {
        self.log_pdf(theta)
    }

    fn grad_log_density(&self, theta: &[f64], out: &mut [f64]) {
        self.grad_log_pdf(theta, out)
    }

    fn exact_sampler(&self) -> Option<&dyn ExactSampler> {
        Some(self)
    }
}

impl ExactSampler for GaussianMixture {
    fn sample(&self, rng: &mut RngStream) -> Vec<f64> {
        let u = rng.uniform();
        let c = self
            .cumulative
            .iter()
            .position(|&acc| u < acc)
            .unwrap_or(self.components() - 1);
        let mean = self.spec.means.row(c);
        let var = self.spec.variances.row(c);
        mean.iter()
            .zip(var)
            .map(|(m, v)| m + libm::sqrt(*v) * rng.standard_normal())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_grad(t: &GaussianMixture, theta: &[f64]) -> Vec<f64> {
        (0..theta.len())
            .map(|d| {
                let eps = 1e-5 * theta[d].abs().max(1.0);
                let mut p = theta.to_vec();
                let mut m = theta.to_vec();
                p[d] += eps;
                m[d] -= eps;
                (t.log_pdf(&p) - t.log_pdf(&m)) / (2.0 * eps)
            })
            .collect()
    }

    #[test]
    fn gradient_vanishes_at_single_mean() {
        let g = GaussianMixture::isotropic(&[&[1.5, -0.5]], 0.7).unwrap();
        let mut out = [1.0; 2];
        g.grad_log_pdf(&[1.5, -0.5], &mut out);
        assert_eq!(out, [0.0, 0.0]);
    }

    #[test]
    fn gradient_vanishes_at_symmetric_center() {
        let g = GaussianMixture::isotropic(&[&[2.0, 0.0], &[-2.0, 0.0]], 0.5).unwrap();
        let mut out = [1.0; 2];
        g.grad_log_pdf(&[0.0, 0.0], &mut out);
        assert!(out[0].abs() < 1e-15 && out[1].abs() < 1e-15);
    }

    #[test]
    fn standard_normal_log_pdf() {
        let g = GaussianMixture::standard(1).unwrap();
        let expected = -0.5 * libm::log(2.0 * PI) - 0.5 * 0.25;
        assert!((g.log_pdf(&[0.5]) - expected).abs() < 1e-14);
    }

    #[test]
    fn random_spec_matches_finite_differences() {
        let mut rng = RngStream::new(77);
        for _ in 0..20 {
            let k = 1 + rng.index(4);
            let r = 1 + rng.index(4);
            let means = rng.gaussian_noise(k, r);
            let mut variances = Matrix::zeros(k, r);
            for v in variances.as_mut_slice() {
                *v = rng.uniform_range(0.3, 2.0);
            }
            let raw: Vec<f64> = (0..k).map(|_| rng.uniform_range(0.1, 1.0)).collect();
            let total: f64 = raw.iter().sum();
            let weights = raw.iter().map(|w| w / total).collect();
            let g = GaussianMixture::new(GaussianMixtureSpec {
                means,
                variances,
                weights,
            })
            .unwrap();
            for _ in 0..5 {
                let theta: Vec<f64> = (0..r).map(|_| 1.5 * rng.standard_normal()).collect();
                let mut grad = vec![0.0; r];
                g.grad_log_pdf(&theta, &mut grad);
                let fd = fd_grad(&g, &theta);
                for (a, f) in grad.iter().zip(&fd) {
                    let rel = (a - f).abs() / (a.abs() + 1e-12);
                    assert!(rel <= 1e-6 || (a - f).abs() < 1e-9, "rel {rel} a {a} fd {f}");
                }
            }
        }
    }

    #[test]
    fn rejects_invalid_specs() {
        let bad_weights = GaussianMixtureSpec {
            means: Matrix::zeros(2, 1),
            variances: Matrix::from_vec(2, 1, vec![1.0, 1.0]).unwrap(),
            weights: vec![0.3, 0.3],
        };
        assert!(GaussianMixture::new(bad_weights).is_err());
        let bad_var = GaussianMixtureSpec {
            means: Matrix::zeros(1, 1),
            variances: Matrix::zeros(1, 1),
            weights: vec![1.0],
        };
        assert!(GaussianMixture::new(bad_var).is_err());
    }

    #[test]
    fn exact_samples_have_component_moments() {
        let g = GaussianMixture::isotropic(&[&[3.0, -1.0]], 0.5).unwrap();
        let mut rng = RngStream::new(8);
        let n = 20_000;
        let mut mean = [0.0; 2];
        for _ in 0..n {
            let s = g.sample(&mut rng);
            mean[0] += s[0] / n as f64;
            mean[1] += s[1] / n as f64;
        }
        assert!((mean[0] - 3.0).abs() < 0.02 && (mean[1] + 1.0).abs() < 0.02);
    }
}
