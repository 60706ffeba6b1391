//! Target distributions `p(θ) ∝ exp(U(θ))`.

use alloc::vec::Vec;

use crate::rng::RngStream;

mod gaussian;
mod logistic;
mod toy;

pub use gaussian::{GaussianMixture, GaussianMixtureSpec};
pub use logistic::{
    log_sigmoid, sigmoid, synth_logreg, LogisticRegression, LogisticRegressionData,
    Standardization,
};
pub use toy::{toy_potential, ToyPotential, ToyTarget};

/// An unnormalized log-density `U(θ) = log p(X|θ) + log p(θ)` with gradients.
pub trait Target {
    fn dim(&self) -> usize;

    /// `U(θ)`, up to an additive constant.
    fn log_density(&self, theta: &[f64]) -> f64;

    /// `∇U(θ)`, written into `out` (length `dim()`).
    fn grad_log_density(&self, theta: &[f64], out: &mut [f64]);

    /// Number of observations `N` when the target is data-backed.
    fn data_len(&self) -> Option<usize> {
        None
    }

    /// Minibatch estimate `∇Ũ(θ)` over the observation indices in `batch`.
    /// Targets without data fall back to the exact gradient.
    fn stochastic_grad(&self, theta: &[f64], batch: &[usize], out: &mut [f64]) {
        let _ = batch;
        self.grad_log_density(theta, out);
    }

    fn exact_sampler(&self) -> Option<&dyn ExactSampler> {
        None
    }
}

/// Targets that can be sampled exactly (used by Stein-identity checks and ground truth).
pub trait ExactSampler {
    fn sample(&self, rng: &mut RngStream) -> Vec<f64>;
}

impl<T: Target + ?Sized> Target for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn log_density(&self, theta: &[f64]) -> f64 {
        (**self).log_density(theta)
    }
    fn grad_log_density(&self, theta: &[f64], out: &mut [f64]) {
        (**self).grad_log_density(theta, out)
    }
    fn data_len(&self) -> Option<usize> {
        (**self).data_len()
    }
    fn stochastic_grad(&self, theta: &[f64], batch: &[usize], out: &mut [f64]) {
        (**self).stochastic_grad(theta, batch, out)
    }
    fn exact_sampler(&self) -> Option<&dyn ExactSampler> {
        (**self).exact_sampler()
    }
}

/// `U(θ) = -‖θ‖²/2`; handy in reduction tests.
#[derive(Clone, Copy, Debug)]
pub struct StandardQuadratic {
    pub dim: usize,
}

impl Target for StandardQuadratic {
    fn dim(&self) -> usize {
        self.dim
    }

    fn log_density(&self, theta: &[f64]) -> f64 {
        -0.5 * crate::linalg::dot(theta, theta)
    }

    fn grad_log_density(&self, theta: &[f64], out: &mut [f64]) {
        for (o, t) in out.iter_mut().zip(theta) {
            *o = -t;
        }
    }

    fn exact_sampler(&self) -> Option<&dyn ExactSampler> {
        Some(self)
    }
}

impl ExactSampler for StandardQuadratic {
    fn sample(&self, rng: &mut RngStream) -> Vec<f64> {
        (0..self.dim).map(|_| rng.standard_normal()).collect()
    }
}

/// `U ≡ 0`: no drift, only particle interactions.
#[derive(Clone, Copy, Debug)]
pub struct Flat {
    pub dim: usize,
}

impl Target for Flat {
    fn dim(&self) -> usize {
        self.dim
    }

    fn log_density(&self, _theta: &[f64]) -> f64 {
        0.0
    }

    fn grad_log_density(&self, _theta: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
    }
}
