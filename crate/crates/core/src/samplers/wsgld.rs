use crate::config::{Minibatch, SamplerConfig, TransportMode};
use crate::ensemble::ParticleEnsemble;
use crate::error::{invalid, Error, Result};
use crate::linalg::{pairwise_sq_dist, Matrix};
use crate::rng::RngStream;
use crate::targets::Target;
use crate::transport::sinkhorn_plan;

use super::step_gradients;

/// How the `u_i v_j` scaling of the entropic plan is obtained.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum F2Mode {
    /// `u_i v_j ≡ γ`.
    FixedScale { scale: f64 },
    /// Sinkhorn scalings, so `u_i v_j e^{-d_ij/λ} = p_ij`; `scale` multiplies the result.
    Sinkhorn { scale: f64, max_iter: usize, tol: f64 },
}

impl F2Mode {
    pub fn from_config(config: &SamplerConfig) -> Self {
        match config.transport_mode {
            TransportMode::FixedScale => F2Mode::FixedScale {
                scale: config.plan_scale,
            },
            TransportMode::Sinkhorn => F2Mode::Sinkhorn {
                scale: config.plan_scale,
                max_iter: config.sinkhorn_max_iter,
                tol: config.sinkhorn_tol,
            },
        }
    }
}

/// Gradient of the KL part of the JKO objective: `-∇U` (or `-∇Ũ`) per particle.
pub fn wsgld_grad_f1<T: Target + ?Sized>(
    ensemble: &ParticleEnsemble,
    target: &T,
    minibatch: Minibatch,
    rng: &mut RngStream,
) -> Result<Matrix> {
    let mut g = step_gradients(target, ensemble, minibatch, rng)?;
    g.scale(-1.0);
    Ok(g)
}

/// Gradient of the entropic transport term against the lagged ensemble:
/// row `i` is `Σ_j 2 w_ij (d_ij/λ - 1) e^{-d_ij/λ} (θ_i - θ'_j)` with
/// `d_ij = ‖θ_i - θ'_j‖²`. Descending it pulls `θ_i` toward `θ'_j` when
/// `d_ij > λ` and pushes it away when `d_ij < λ`.
pub fn wsgld_grad_f2(
    ensemble: &ParticleEnsemble,
    previous: &ParticleEnsemble,
    reg: f64,
    mode: F2Mode,
) -> Result<Matrix> {
    if !(reg > 0.0 && reg.is_finite()) {
        return Err(invalid("entropic_reg", "must be positive and finite"));
    }
    if ensemble.dim() != previous.dim() {
        return Err(Error::DimensionMismatch {
            expected: ensemble.dim(),
            found: previous.dim(),
        });
    }
    let cost = pairwise_sq_dist(ensemble.positions(), previous.positions())?;
    // weight[i][j] multiplies 2 (d/λ - 1)(θ_i - θ'_j)
    let (m, n, r) = (ensemble.len(), previous.len(), ensemble.dim());
    let weight = match mode {
        F2Mode::FixedScale { scale } => {
            let mut w = cost.clone();
            for v in w.as_mut_slice() {
                *v = scale * libm::exp(-*v / reg);
            }
            w
        }
        F2Mode::Sinkhorn {
            scale,
            max_iter,
            tol,
        } => {
            let plan = sinkhorn_plan(&cost, reg, max_iter, tol)?;
            let mut w = plan.plan().clone();
            w.scale(scale);
            w
        }
    };
    let mut out = Matrix::zeros(m, r);
    for i in 0..m {
        let xi = ensemble.particle(i);
        let row = out.row_mut(i);
        for j in 0..n {
            let xj = previous.particle(j);
            let c = 2.0 * weight.get(i, j) * (cost.get(i, j) / reg - 1.0);
            for d in 0..r {
                row[d] += c * (xi[d] - xj[d]);
            }
        }
    }
    Ok(out)
}

/// One gradient step on the JKO objective: `θ ← θ - h (F1 + F2)`.
pub fn wsgld_step<T: Target + ?Sized>(
    ensemble: &ParticleEnsemble,
    previous: &ParticleEnsemble,
    target: &T,
    config: &SamplerConfig,
    iteration: usize,
    rng: &mut RngStream,
) -> Result<ParticleEnsemble> {
    let h = config.schedule.stepsize(config.stepsize, iteration);
    let mut grad = wsgld_grad_f1(ensemble, target, config.minibatch, rng)?;
    let f2 = wsgld_grad_f2(ensemble, previous, config.entropic_reg, F2Mode::from_config(config))?;
    grad.add_scaled(1.0, &f2)?;
    ensemble.advanced(-h, &grad)
}
