use crate::config::SamplerConfig;
use crate::ensemble::ParticleEnsemble;
use crate::error::Result;
use crate::linalg::Matrix;
use crate::rng::RngStream;
use crate::targets::Target;

use super::step_gradients;

/// `θ + h·drift + noise_scale·ξ`, elementwise in that evaluation order.
pub fn langevin_update(
    ensemble: &ParticleEnsemble,
    drift: &Matrix,
    stepsize: f64,
    noise: Option<(f64, &Matrix)>,
) -> Result<ParticleEnsemble> {
    let mut next = ensemble.positions().clone();
    let out = next.as_mut_slice();
    for (x, g) in out.iter_mut().zip(drift.as_slice()) {
        *x += stepsize * g;
    }
    if let Some((scale, xi)) = noise {
        for (x, z) in out.iter_mut().zip(xi.as_slice()) {
            *x += scale * z;
        }
    }
    ParticleEnsemble::new(next)
}

/// `θ_ℓ = θ_{ℓ-1} + h∇Ũ(θ_{ℓ-1}) + √(2h) δ_ℓ` for every particle: `M`
/// independent chains sharing one minibatch per iteration.
pub fn sgld_step<T: Target + ?Sized>(
    ensemble: &ParticleEnsemble,
    target: &T,
    config: &SamplerConfig,
    iteration: usize,
    rng: &mut RngStream,
) -> Result<ParticleEnsemble> {
    let h = config.schedule.stepsize(config.stepsize, iteration);
    let grads = step_gradients(target, ensemble, config.minibatch, rng)?;
    let noise = rng.gaussian_noise(ensemble.len(), ensemble.dim());
    langevin_update(ensemble, &grads, h, Some((libm::sqrt(2.0 * h), &noise)))
}
