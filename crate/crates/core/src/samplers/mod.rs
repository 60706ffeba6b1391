//! Particle evolution engines.
//!
//! Each stepper maps `(ensemble, target, config, rng)` to the next ensemble.
//! Random draws within one step always happen in the same order: minibatch
//! indices first (only for data-backed targets with `Minibatch::Size`), then
//! Gaussian noise row by row.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::config::{Minibatch, SamplerConfig};
use crate::ensemble::ParticleEnsemble;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::rng::RngStream;
use crate::targets::Target;

mod blob;
mod pi_sgld;
mod sgld;
mod svgd;
mod wsgld;

pub use blob::{blob_velocity, blob_velocity_from_grads, wsgld_b_step};
pub use pi_sgld::pi_sgld_step;
pub use sgld::{langevin_update, sgld_step};
pub use svgd::{svgd_direction, svgd_direction_from_grads, svgd_step};
pub use wsgld::{wsgld_grad_f1, wsgld_grad_f2, wsgld_step, F2Mode};

/// Draws the observation indices for one step, or `None` for exact gradients.
pub fn draw_minibatch<T: Target + ?Sized>(
    target: &T,
    minibatch: Minibatch,
    rng: &mut RngStream,
) -> Result<Option<Vec<usize>>> {
    match (minibatch, target.data_len()) {
        (Minibatch::Size(n), Some(total)) => {
            if n == 0 || n > total {
                return Err(Error::MinibatchTooLarge {
                    requested: n,
                    available: total,
                });
            }
            Ok(Some(rng.sample_without_replacement(total, n)))
        }
        _ => Ok(None),
    }
}

/// `∇U` (or `∇Ũ` over `batch`) at every particle, one row each.
pub fn ensemble_gradients<T: Target + ?Sized>(
    target: &T,
    ensemble: &ParticleEnsemble,
    batch: Option<&[usize]>,
) -> Result<Matrix> {
    if target.dim() != ensemble.dim() {
        return Err(Error::DimensionMismatch {
            expected: target.dim(),
            found: ensemble.dim(),
        });
    }
    let mut grads = Matrix::zeros(ensemble.len(), ensemble.dim());
    for i in 0..ensemble.len() {
        let out = grads.row_mut(i);
        match batch {
            Some(b) => target.stochastic_grad(ensemble.particle(i), b, out),
            None => target.grad_log_density(ensemble.particle(i), out),
        }
        if out.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFiniteGradient { particle: i });
        }
    }
    Ok(grads)
}

pub(crate) fn step_gradients<T: Target + ?Sized>(
    target: &T,
    ensemble: &ParticleEnsemble,
    minibatch: Minibatch,
    rng: &mut RngStream,
) -> Result<Matrix> {
    let batch = draw_minibatch(target, minibatch, rng)?;
    ensemble_gradients(target, ensemble, batch.as_deref())
}

/// The concrete samplers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SamplerKind {
    Sgld,
    Svgd,
    /// Discrete-gradient-flow (JKO) particle optimization.
    WSgld,
    /// Blob-method particle optimization.
    WSgldBlob,
    /// SGLD drift and noise plus the SVGD interaction.
    PiSgld,
}

impl SamplerKind {
    pub const ALL: [SamplerKind; 5] = [
        SamplerKind::Sgld,
        SamplerKind::Svgd,
        SamplerKind::WSgld,
        SamplerKind::WSgldBlob,
        SamplerKind::PiSgld,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            SamplerKind::Sgld => "sgld",
            SamplerKind::Svgd => "svgd",
            SamplerKind::WSgld => "w-sgld",
            SamplerKind::WSgldBlob => "w-sgld-b",
            SamplerKind::PiSgld => "pi-sgld",
        }
    }

    /// Whether the sampler moves particles jointly (everything but plain SGLD).
    pub fn is_particle_optimization(&self) -> bool {
        !matches!(self, SamplerKind::Sgld)
    }
}

impl fmt::Display for SamplerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SamplerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SamplerKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::UnsupportedCombination(format!("unknown sampler `{s}`")))
    }
}

/// Drift `F(θ)` of the unified density evolution.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Drift {
    Zero,
    /// `F = ½∇U`, the first-order Langevin drift.
    HalfGradient,
}

/// Diffusion coefficient `g(θ)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Diffusion {
    Zero,
    Identity,
}

/// Interaction kernel `W` convolved with the density.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Interaction {
    None,
    /// `W(θ, θ') = κ(θ', θ)∇U(θ') + ∇_θ' κ(θ', θ)`.
    Svgd,
}

/// How the entropy term is approximated on particles.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Approximation {
    DiscreteGradientFlow,
    Blob,
}

/// A user-facing `(F, g, W, λ1, λ2)` combination of the unified evolution
/// `∂μ/∂t = -∇·(μF) + λ1 ∇·((W*μ)μ) + λ2 ∇∇:(μ g gᵀ)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UnifiedSpec {
    pub drift: Drift,
    pub diffusion: Diffusion,
    pub interaction: Interaction,
    pub lambda1: f64,
    pub lambda2: f64,
    pub approximation: Approximation,
    /// The caller vouches that this combination keeps the posterior
    /// stationary; non-preset combinations then run on the general stepper.
    pub asserted: bool,
}

impl UnifiedSpec {
    /// Maps a combination onto the stepper that realizes it. Only the three
    /// combinations known to leave the posterior stationary are accepted; the
    /// returned config carries the `λ1`, `λ2` and drift settings.
    pub fn resolve(&self, config: &SamplerConfig) -> Result<(SamplerKind, SamplerConfig)> {
        let mut cfg = config.clone();
        let langevin = self.drift == Drift::HalfGradient
            && self.diffusion == Diffusion::Identity
            && self.lambda2 == 1.0;
        match self.interaction {
            Interaction::None if langevin => {
                let kind = match self.approximation {
                    Approximation::DiscreteGradientFlow => SamplerKind::WSgld,
                    Approximation::Blob => SamplerKind::WSgldBlob,
                };
                Ok((kind, cfg))
            }
            Interaction::Svgd
                if self.drift == Drift::Zero
                    && self.diffusion == Diffusion::Zero
                    && self.lambda1 > 0.0 =>
            {
                if self.lambda1 == 1.0 {
                    Ok((SamplerKind::Svgd, cfg))
                } else {
                    cfg.svgd_weight = self.lambda1;
                    cfg.diffusion_weight = 0.0;
                    cfg.langevin_drift = false;
                    Ok((SamplerKind::PiSgld, cfg))
                }
            }
            Interaction::Svgd if langevin && self.lambda1 >= 0.0 => {
                cfg.svgd_weight = self.lambda1;
                cfg.diffusion_weight = 1.0;
                cfg.langevin_drift = true;
                Ok((SamplerKind::PiSgld, cfg))
            }
            _ if self.asserted => {
                if !(self.lambda1 >= 0.0 && self.lambda2 >= 0.0) {
                    return Err(Error::UnsupportedCombination(self.rejection_reason()));
                }
                cfg.langevin_drift = self.drift == Drift::HalfGradient;
                cfg.svgd_weight = match self.interaction {
                    Interaction::None => 0.0,
                    Interaction::Svgd => self.lambda1,
                };
                cfg.diffusion_weight = match self.diffusion {
                    Diffusion::Zero => 0.0,
                    Diffusion::Identity => self.lambda2,
                };
                Ok((SamplerKind::PiSgld, cfg))
            }
            _ => Err(Error::UnsupportedCombination(self.rejection_reason())),
        }
    }

    fn rejection_reason(&self) -> String {
        format!(
            "(F={:?}, g={:?}, W={:?}, λ1={}, λ2={}) is not a recognised preset; the posterior is \
             stationary only if ∇·(pF) = λ1 ∇·((W*p)p) + λ2 ∇∇:(p g gᵀ), which holds for \
             (F=½∇U, g=I, W=0, λ2=1), (F=0, g=0, W=SVGD) and (F=½∇U, g=I, W=SVGD, λ2=1); \
             set `asserted` to run another combination on the general stepper",
            self.drift, self.diffusion, self.interaction, self.lambda1, self.lambda2
        )
    }
}

/// Per-run state that outlives a single step.
#[derive(Clone, Debug)]
pub struct StepContext {
    pub iteration: usize,
    /// Lagged ensemble `{θ_{k-1}}` of the current JKO block.
    pub previous: ParticleEnsemble,
    steps_in_block: usize,
    /// Bandwidth of `κ` used by the last step, if any.
    pub kernel_bandwidth: Option<f64>,
}

impl StepContext {
    pub fn new(initial: &ParticleEnsemble) -> Self {
        Self {
            iteration: 0,
            previous: initial.clone(),
            steps_in_block: 0,
            kernel_bandwidth: None,
        }
    }
}

/// One step of `kind` with its context bookkeeping (JKO block refresh, counters).
pub fn step_kind<T: Target + ?Sized>(
    kind: SamplerKind,
    ensemble: &ParticleEnsemble,
    ctx: &mut StepContext,
    target: &T,
    config: &SamplerConfig,
    rng: &mut RngStream,
) -> Result<ParticleEnsemble> {
    let it = ctx.iteration;
    let next = match kind {
        SamplerKind::Sgld => sgld_step(ensemble, target, config, it, rng)?,
        SamplerKind::Svgd => svgd_step(ensemble, target, config, it, rng)?,
        SamplerKind::WSgld => {
            let next = wsgld_step(ensemble, &ctx.previous, target, config, it, rng)?;
            ctx.steps_in_block += 1;
            if ctx.steps_in_block >= config.inner_steps {
                ctx.previous = next.clone();
                ctx.steps_in_block = 0;
            }
            next
        }
        SamplerKind::WSgldBlob => wsgld_b_step(ensemble, target, config, it, rng)?,
        SamplerKind::PiSgld => pi_sgld_step(ensemble, target, config, it, rng)?,
    };
    ctx.iteration += 1;
    Ok(next)
}

/// Resolves `spec` and performs one step of the matching sampler.
pub fn unified_step<T: Target + ?Sized>(
    ensemble: &ParticleEnsemble,
    ctx: &mut StepContext,
    target: &T,
    spec: &UnifiedSpec,
    config: &SamplerConfig,
    rng: &mut RngStream,
) -> Result<ParticleEnsemble> {
    let (kind, cfg) = spec.resolve(config)?;
    step_kind(kind, ensemble, ctx, target, &cfg, rng)
}

/// A running sampler: target, configuration, random stream and current particles.
pub struct Sampler<T: Target> {
    target: T,
    kind: SamplerKind,
    config: SamplerConfig,
    rng: RngStream,
    ensemble: ParticleEnsemble,
    ctx: StepContext,
}

impl<T: Target> Sampler<T> {
    pub fn new(
        target: T,
        kind: SamplerKind,
        config: SamplerConfig,
        initial: ParticleEnsemble,
        rng: RngStream,
    ) -> Result<Self> {
        config.validate()?;
        if target.dim() != initial.dim() {
            return Err(Error::DimensionMismatch {
                expected: target.dim(),
                found: initial.dim(),
            });
        }
        let ctx = StepContext::new(&initial);
        Ok(Self {
            target,
            kind,
            config,
            rng,
            ensemble: initial,
            ctx,
        })
    }

    pub fn from_unified(
        target: T,
        spec: &UnifiedSpec,
        config: SamplerConfig,
        initial: ParticleEnsemble,
        rng: RngStream,
    ) -> Result<Self> {
        let (kind, cfg) = spec.resolve(&config)?;
        Self::new(target, kind, cfg, initial, rng)
    }

    pub fn kind(&self) -> SamplerKind {
        self.kind
    }

    pub fn config(&self) -> &SamplerConfig {
        &self.config
    }

    pub fn target(&self) -> &T {
        &self.target
    }

    pub fn ensemble(&self) -> &ParticleEnsemble {
        &self.ensemble
    }

    /// Number of completed steps.
    pub fn iteration(&self) -> usize {
        self.ctx.iteration
    }

    pub fn step(&mut self) -> Result<&ParticleEnsemble> {
        let next = step_kind(
            self.kind,
            &self.ensemble,
            &mut self.ctx,
            &self.target,
            &self.config,
            &mut self.rng,
        )?;
        self.ensemble = next;
        Ok(&self.ensemble)
    }

    /// Runs `steps` iterations, calling `observe(iteration, ensemble)` after each.
    pub fn run<F>(&mut self, steps: usize, mut observe: F) -> Result<()>
    where
        F: FnMut(usize, &ParticleEnsemble),
    {
        for _ in 0..steps {
            self.step()?;
            observe(self.ctx.iteration, &self.ensemble);
        }
        Ok(())
    }
}
