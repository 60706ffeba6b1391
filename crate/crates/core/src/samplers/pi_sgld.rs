use crate::config::SamplerConfig;
use crate::ensemble::ParticleEnsemble;
use crate::error::Result;
use crate::rng::RngStream;
use crate::targets::Target;

use super::sgld::langevin_update;
use super::step_gradients;
use super::svgd::svgd_direction_from_grads;
use crate::kernels::RbfKernel;

/// `θ ← θ + h[∇Ũ(θ) + λ1 φ(θ)] + √(2 λ2 h) ξ`, with `φ` the SVGD direction
/// built from the same minibatch gradients. The `∇Ũ` term is dropped when
/// `langevin_drift` is off; `φ` is not computed when `λ1 = 0` and no noise
/// is drawn when `λ2 = 0`.
pub fn pi_sgld_step<T: Target + ?Sized>(
    ensemble: &ParticleEnsemble,
    target: &T,
    config: &SamplerConfig,
    iteration: usize,
    rng: &mut RngStream,
) -> Result<ParticleEnsemble> {
    let h = config.schedule.stepsize(config.stepsize, iteration);
    let grads = step_gradients(target, ensemble, config.minibatch, rng)?;
    let l1 = config.svgd_weight;
    let l2 = config.diffusion_weight;
    let drift = if l1 == 0.0 {
        if config.langevin_drift {
            grads
        } else {
            crate::linalg::Matrix::zeros(ensemble.len(), ensemble.dim())
        }
    } else {
        let kernel = RbfKernel::from_policy(config.bandwidth, ensemble, config.noise_floor)?;
        let mut phi = svgd_direction_from_grads(ensemble, &kernel, &grads)?;
        if config.langevin_drift {
            let mut d = grads;
            d.add_scaled(l1, &phi)?;
            d
        } else {
            phi.scale(l1);
            phi
        }
    };
    if l2 > 0.0 {
        let noise = rng.gaussian_noise(ensemble.len(), ensemble.dim());
        langevin_update(ensemble, &drift, h, Some((libm::sqrt(2.0 * l2 * h), &noise)))
    } else {
        langevin_update(ensemble, &drift, h, None)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Minibatch;
    use crate::samplers::{sgld_step, svgd_step};
    use crate::targets::{synth_logreg, LogisticRegression, StandardQuadratic};

    fn ensemble() -> ParticleEnsemble {
        ParticleEnsemble::from_rows(&[[0.3, -1.0], [1.2, 0.4], [-0.8, 0.9], [0.0, 0.1]]).unwrap()
    }

    #[test]
    fn no_interaction_is_sgld_bitwise() {
        let target = StandardQuadratic { dim: 2 };
        let cfg = SamplerConfig { svgd_weight: 0.0, diffusion_weight: 1.0, stepsize: 0.05, ..Default::default() };
        let mut ra = RngStream::new(8);
        let mut rb = RngStream::new(8);
        let (mut a, mut b) = (ensemble(), ensemble());
        for it in 0..20 {
            a = pi_sgld_step(&a, &target, &cfg, it, &mut ra).unwrap();
            b = sgld_step(&b, &target, &cfg, it, &mut rb).unwrap();
        }
        assert_eq!(a, b);
    }

    #[test]
    fn no_interaction_is_sgld_bitwise_with_minibatches() {
        let mut rng = RngStream::new(1);
        let data = synth_logreg(40, 3, 2.0, &mut rng).unwrap();
        let target = LogisticRegression::new(data);
        let cfg = SamplerConfig {
            svgd_weight: 0.0,
            minibatch: Minibatch::Size(7),
            stepsize: 1e-3,
            ..Default::default()
        };
        let e = ParticleEnsemble::from_rows(&[[0.1, 0.0, -0.2, 0.3], [0.0, 0.5, 0.1, -0.1]]).unwrap();
        let a = pi_sgld_step(&e, &target, &cfg, 0, &mut RngStream::new(5)).unwrap();
        let b = sgld_step(&e, &target, &cfg, 0, &mut RngStream::new(5)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn no_noise_no_drift_is_scaled_svgd() {
        let target = StandardQuadratic { dim: 2 };
        let base = SamplerConfig { stepsize: 0.05, ..Default::default() };
        let cfg = SamplerConfig { svgd_weight: 1.0, diffusion_weight: 0.0, langevin_drift: false, ..base.clone() };
        let a = pi_sgld_step(&ensemble(), &target, &cfg, 0, &mut RngStream::new(0)).unwrap();
        let b = svgd_step(&ensemble(), &target, &base, 0, &mut RngStream::new(0)).unwrap();
        assert_eq!(a, b);

        let cfg = SamplerConfig { svgd_weight: 0.5, ..cfg };
        let half = SamplerConfig { stepsize: 0.025, ..base };
        let a = pi_sgld_step(&ensemble(), &target, &cfg, 0, &mut RngStream::new(0)).unwrap();
        let b = svgd_step(&ensemble(), &target, &half, 0, &mut RngStream::new(0)).unwrap();
        for (x, y) in a.positions().as_slice().iter().zip(b.positions().as_slice()) {
            assert!((x - y).abs() < 1e-14);
        }
    }
}
