//! Initial particle placement.

use alloc::format;
use alloc::vec::Vec;

use crate::ensemble::ParticleEnsemble;
use crate::error::{invalid, Result};
use crate::linalg::Matrix;
use crate::rng::RngStream;

#[derive(Clone, Debug, PartialEq)]
pub enum InitScheme {
    /// Independent `N(mean, scale² I)` draws.
    Gaussian { mean: Vec<f64>, scale: f64 },
    /// Uniform over the box `[lo_d, hi_d]` in every dimension.
    Uniform { lo: Vec<f64>, hi: Vec<f64> },
}

impl InitScheme {
    pub fn dim(&self) -> usize {
        match self {
            InitScheme::Gaussian { mean, .. } => mean.len(),
            InitScheme::Uniform { lo, .. } => lo.len(),
        }
    }
}

/// Draws `m` particles. Coordinates are drawn particle by particle,
/// dimension by dimension.
pub fn init_particles(m: usize, scheme: &InitScheme, rng: &mut RngStream) -> Result<ParticleEnsemble> {
    if m == 0 {
        return Err(invalid("particles", "must be at least 1"));
    }
    let r = scheme.dim();
    if r == 0 {
        return Err(invalid("init", "dimension must be at least 1"));
    }
    let mut data = Vec::with_capacity(m * r);
    match scheme {
        InitScheme::Gaussian { mean, scale } => {
            if !(*scale >= 0.0 && scale.is_finite()) {
                return Err(invalid("init", format!("scale must be nonnegative, got {scale}")));
            }
            for _ in 0..m {
                for mu in mean {
                    data.push(mu + scale * rng.standard_normal());
                }
            }
        }
        InitScheme::Uniform { lo, hi } => {
            if hi.len() != r || lo.iter().zip(hi).any(|(a, b)| !(a <= b) || !a.is_finite() || !b.is_finite()) {
                return Err(invalid("init", "box bounds must be finite with lo <= hi"));
            }
            for _ in 0..m {
                for (a, b) in lo.iter().zip(hi) {
                    data.push(rng.uniform_range(*a, *b));
                }
            }
        }
    }
    ParticleEnsemble::new(Matrix::from_vec(m, r, data)?)
}
