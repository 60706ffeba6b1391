use crate::config::{Minibatch, SamplerConfig};
use crate::ensemble::ParticleEnsemble;
use crate::error::{Error, Result};
use crate::kernels::RbfKernel;
use crate::linalg::Matrix;
use crate::rng::RngStream;
use crate::targets::Target;

use super::step_gradients;

/// `φ(θ_i) = (1/M) Σ_j [κ(θ_j, θ_i) g_j + ∇_{θ_j} κ(θ_j, θ_i)]` for given gradients `g`.
pub fn svgd_direction_from_grads(
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
    let scale = -2.0 / kernel.bandwidth();
    let mut dir = Matrix::zeros(m, r);
    for i in 0..m {
        let xi = ensemble.particle(i);
        let out = dir.row_mut(i);
        for j in 0..m {
            let xj = ensemble.particle(j);
            let k = kernel.eval(xj, xi);
            let gj = grads.row(j);
            for d in 0..r {
                out[d] += k * gj[d] + scale * k * (xj[d] - xi[d]);
            }
        }
        for o in out.iter_mut() {
            *o /= m as f64;
        }
    }
    Ok(dir)
}

/// SVGD update direction, drawing a minibatch first when `minibatch` asks for one.
pub fn svgd_direction<T: Target + ?Sized>(
    ensemble: &ParticleEnsemble,
    target: &T,
    kernel: &RbfKernel,
    minibatch: Minibatch,
    rng: &mut RngStream,
) -> Result<Matrix> {
    let grads = step_gradients(target, ensemble, minibatch, rng)?;
    svgd_direction_from_grads(ensemble, kernel, &grads)
}

/// `θ_i ← θ_i + h φ(θ_i)`.
pub fn svgd_step<T: Target + ?Sized>(
    ensemble: &ParticleEnsemble,
    target: &T,
    config: &SamplerConfig,
    iteration: usize,
    rng: &mut RngStream,
) -> Result<ParticleEnsemble> {
    let h = config.schedule.stepsize(config.stepsize, iteration);
    let kernel = RbfKernel::from_policy(config.bandwidth, ensemble, config.noise_floor)?;
    let dir = svgd_direction(ensemble, target, &kernel, config.minibatch, rng)?;
    ensemble.advanced(h, &dir)
}
