use crate::config::{Minibatch, SamplerConfig};
use crate::ensemble::ParticleEnsemble;
use crate::error::{Error, Result};
use crate::kernels::RbfKernel;
use crate::linalg::Matrix;
use crate::rng::RngStream;
use crate::targets::Target;

use super::step_gradients;

/// Blob velocity for given gradients:
/// `v_i = g_i - Σ_j ∇₁K(θ_i, θ_j) / Z_j - Σ_j ∇₁K(θ_i, θ_j) / Z_i`,
/// `Z_j = Σ_k K(θ_j, θ_k)`. Both smoothing terms repel nearby particles.
pub fn blob_velocity_from_grads(
    ensemble: &ParticleEnsemble,
    kernel: &RbfKernel,
    grads: &Matrix,
) -> Result<Matrix> {
    let (m, r) = (ensemble.len(), ensemble.dim());
    if grads.rows() != m || grads.cols() != r {
        return Err(Error::DimensionMismatch {
            expected: m * r,
            found: grads.rows() * grads.cols(),
        });
    }
    let gram = kernel.gram(ensemble);
    let z: alloc::vec::Vec<f64> = gram.iter_rows().map(|row| row.iter().sum()).collect();
    let scale = -2.0 / kernel.bandwidth();
    let mut v = grads.clone();
    for i in 0..m {
        let xi = ensemble.particle(i);
        let out = v.row_mut(i);
        for j in 0..m {
            let xj = ensemble.particle(j);
            let k = gram.get(i, j);
            let w = 1.0 / z[j] + 1.0 / z[i];
            for d in 0..r {
                // ∇₁K(θ_i, θ_j) = -(2/h)(θ_i - θ_j) K
                out[d] -= scale * (xi[d] - xj[d]) * k * w;
            }
        }
    }
    Ok(v)
}

pub fn blob_velocity<T: Target + ?Sized>(
    ensemble: &ParticleEnsemble,
    target: &T,
    kernel: &RbfKernel,
    minibatch: Minibatch,
    rng: &mut RngStream,
) -> Result<Matrix> {
    let grads = step_gradients(target, ensemble, minibatch, rng)?;
    blob_velocity_from_grads(ensemble, kernel, &grads)
}

/// `θ_i ← θ_i + h v_i`.
pub fn wsgld_b_step<T: Target + ?Sized>(
    ensemble: &ParticleEnsemble,
    target: &T,
    config: &SamplerConfig,
    iteration: usize,
    rng: &mut RngStream,
) -> Result<ParticleEnsemble> {
    let h = config.schedule.stepsize(config.stepsize, iteration);
    let kernel = RbfKernel::from_policy(config.blob_bandwidth, ensemble, config.noise_floor)?;
    let v = blob_velocity(ensemble, target, &kernel, config.minibatch, rng)?;
    ensemble.advanced(h, &v)
}
