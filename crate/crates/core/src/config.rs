//! Stepper parameters shared by all samplers.

use alloc::format;

use crate::error::{invalid, Result};

/// How a kernel bandwidth is chosen.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BandwidthPolicy {
    /// `max(med², floor) / log M`, recomputed every iteration.
    Median,
    Fixed(f64),
}

/// Exact gradients or minibatch estimates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Minibatch {
    Full,
    Size(usize),
}

/// How the `u_i v_j` factor of the transport force is obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TransportMode {
    /// `u_i v_j ≈ γ`.
    FixedScale,
    /// `u_i v_j` from an entropic plan re-solved every iteration; `γ` weights the force.
    Sinkhorn,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StepSchedule {
    Constant,
    /// `h_ℓ = h · (ℓ + 1)^(-exponent)`.
    PolynomialDecay { exponent: f64 },
}

impl StepSchedule {
    pub fn stepsize(&self, base: f64, iteration: usize) -> f64 {
        match *self {
            StepSchedule::Constant => base,
            StepSchedule::PolynomialDecay { exponent } => {
                base * libm::pow(iteration as f64 + 1.0, -exponent)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SamplerConfig {
    /// Stepsize `h`.
    pub stepsize: f64,
    pub iterations: usize,
    pub seed: u64,
    pub minibatch: Minibatch,
    /// `λ1`, weight of the SVGD interaction in π-SGLD.
    pub svgd_weight: f64,
    /// `λ2`, weight of the diffusion term in π-SGLD.
    pub diffusion_weight: f64,
    /// Include the `∇U` drift in π-SGLD.
    pub langevin_drift: bool,
    /// Entropic regularizer `λ` of the transport term.
    pub entropic_reg: f64,
    /// `γ`, stand-in for `u_i v_j` (absorbs the JKO `1/2h` weight).
    pub plan_scale: f64,
    pub transport_mode: TransportMode,
    /// Gradient steps per JKO block before the lagged ensemble is refreshed.
    pub inner_steps: usize,
    /// Bandwidth of the SVGD kernel `κ`.
    pub bandwidth: BandwidthPolicy,
    /// Bandwidth of the blob smoothing kernel `K`.
    pub blob_bandwidth: BandwidthPolicy,
    /// Floor `ε_med` on the squared median distance.
    pub noise_floor: f64,
    pub schedule: StepSchedule,
    pub sinkhorn_max_iter: usize,
    pub sinkhorn_tol: f64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            stepsize: 0.01,
            iterations: 1000,
            seed: 0,
            minibatch: Minibatch::Full,
            svgd_weight: 1.0,
            diffusion_weight: 1.0,
            langevin_drift: true,
            entropic_reg: 1.0,
            plan_scale: 1.0,
            transport_mode: TransportMode::FixedScale,
            inner_steps: 1,
            bandwidth: BandwidthPolicy::Median,
            blob_bandwidth: BandwidthPolicy::Median,
            noise_floor: 1e-8,
            schedule: StepSchedule::Constant,
            sinkhorn_max_iter: 10_000,
            sinkhorn_tol: 1e-9,
        }
    }
}

fn positive(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(invalid(name, format!("must be positive and finite, got {value}")))
    }
}

fn nonnegative(name: &'static str, value: f64) -> Result<()> {
    if value >= 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(invalid(name, format!("must be nonnegative and finite, got {value}")))
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        positive("stepsize", self.stepsize)?;
        positive("entropic_reg", self.entropic_reg)?;
        positive("plan_scale", self.plan_scale)?;
        positive("noise_floor", self.noise_floor)?;
        positive("sinkhorn_tol", self.sinkhorn_tol)?;
        nonnegative("svgd_weight", self.svgd_weight)?;
        nonnegative("diffusion_weight", self.diffusion_weight)?;
        if self.iterations == 0 {
            return Err(invalid("iterations", "must be at least 1"));
        }
        if self.inner_steps == 0 {
            return Err(invalid("inner_steps", "must be at least 1"));
        }
        if self.sinkhorn_max_iter == 0 {
            return Err(invalid("sinkhorn_max_iter", "must be at least 1"));
        }
        if self.minibatch == Minibatch::Size(0) {
            return Err(invalid("minibatch", "size must be at least 1"));
        }
        for (name, policy) in [
            ("bandwidth", self.bandwidth),
            ("blob_bandwidth", self.blob_bandwidth),
        ] {
            if let BandwidthPolicy::Fixed(h) = policy {
                positive(name, h)?;
            }
        }
        if let StepSchedule::PolynomialDecay { exponent } = self.schedule {
            nonnegative("schedule", exponent)?;
        }
        Ok(())
    }
}
