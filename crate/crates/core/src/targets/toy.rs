//! Two-dimensional multi-modal toy potentials.
//!
//! | name               | U(θ)                                              | modes            |
//! |--------------------|---------------------------------------------------|------------------|
//! | `ring`             | `-(‖θ‖ - 2)² / 0.125`                             | circle `‖θ‖ = 2` |
//! | `bimodal-gauss`    | log of ½N((±2,0), 0.25 I)                          | `(±2, 0)`        |
//! | `quad-modal-gauss` | log of ¼N((±2,±2), 0.25 I)                         | `(±2, ±2)`       |
//! | `banana`           | `-θ₁²/8 - (θ₂ - θ₁²/4)² / 0.5`                    | `(0, 0)`         |

use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use super::{ExactSampler, GaussianMixture, Target};
use crate::error::{Error, Result};

const RING_RADIUS: f64 = 2.0;
const RING_WIDTH: f64 = 0.25;
const MIXTURE_STD: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ToyPotential {
    Ring,
    BimodalGauss,
    QuadModalGauss,
    Banana,
}

impl ToyPotential {
    pub const ALL: [ToyPotential; 4] = [
        ToyPotential::Ring,
        ToyPotential::BimodalGauss,
        ToyPotential::QuadModalGauss,
        ToyPotential::Banana,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ToyPotential::Ring => "ring",
            ToyPotential::BimodalGauss => "bimodal-gauss",
            ToyPotential::QuadModalGauss => "quad-modal-gauss",
            ToyPotential::Banana => "banana",
        }
    }

    /// Isolated local maxima of `U`. The ring's maximizers form a circle and are not listed.
    pub fn modes(&self) -> Vec<[f64; 2]> {
        match self {
            ToyPotential::Ring => Vec::new(),
            ToyPotential::BimodalGauss => vec![[2.0, 0.0], [-2.0, 0.0]],
            ToyPotential::QuadModalGauss => {
                vec![[2.0, 2.0], [-2.0, 2.0], [-2.0, -2.0], [2.0, -2.0]]
            }
            ToyPotential::Banana => vec![[0.0, 0.0]],
        }
    }

    /// Box `[x_lo, x_hi] × [y_lo, y_hi]` holding all but a negligible fraction of the mass.
    pub fn bounding_box(&self) -> [f64; 4] {
        match self {
            ToyPotential::Banana => [-10.0, 10.0, -5.0, 30.0],
            _ => [-8.0, 8.0, -8.0, 8.0],
        }
    }
}

impl fmt::Display for ToyPotential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ToyPotential {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ToyPotential::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::UnknownPotential(s.to_string()))
    }
}

/// `U(θ)` of a named toy potential.
pub fn toy_potential(name: &str, theta: &[f64; 2]) -> Result<f64> {
    Ok(ToyTarget::new(name.parse()?).log_density(theta))
}

#[derive(Clone, Debug)]
pub struct ToyTarget {
    kind: ToyPotential,
    mixture: Option<GaussianMixture>,
}

impl ToyTarget {
    pub fn new(kind: ToyPotential) -> Self {
        let mixture = match kind {
            ToyPotential::BimodalGauss | ToyPotential::QuadModalGauss => {
                let modes = kind.modes();
                let centers: Vec<&[f64]> = modes.iter().map(|m| &m[..]).collect();
                Some(GaussianMixture::isotropic(&centers, MIXTURE_STD).expect("valid mixture"))
            }
            _ => None,
        };
        Self { kind, mixture }
    }

    pub fn kind(&self) -> ToyPotential {
        self.kind
    }

    pub fn mixture(&self) -> Option<&GaussianMixture> {
        self.mixture.as_ref()
    }
}

impl Target for ToyTarget {
    fn dim(&self) -> usize {
        2
    }

    fn log_density(&self, theta: &[f64]) -> f64 {
        if let Some(m) = &self.mixture {
            return m.log_pdf(theta);
        }
        match self.kind {
            ToyPotential::Ring => {
                let r = libm::hypot(theta[0], theta[1]);
                -(r - RING_RADIUS) * (r - RING_RADIUS) / (2.0 * RING_WIDTH * RING_WIDTH)
            }
            ToyPotential::Banana => {
                let bend = theta[1] - theta[0] * theta[0] / 4.0;
                -theta[0] * theta[0] / 8.0 - bend * bend / 0.5
            }
            _ => unreachable!("mixture potentials handled above"),
        }
    }

    fn grad_log_density(&self, theta: &[f64], out: &mut [f64]) {
        if let Some(m) = &self.mixture {
            return m.grad_log_pdf(theta, out);
        }
        match self.kind {
            ToyPotential::Ring => {
                let r = libm::hypot(theta[0], theta[1]);
                if r == 0.0 {
                    // U is not differentiable at the origin; 0 is the symmetric choice.
                    out[0] = 0.0;
                    out[1] = 0.0;
                } else {
                    let c = -(r - RING_RADIUS) / (RING_WIDTH * RING_WIDTH * r);
                    out[0] = c * theta[0];
                    out[1] = c * theta[1];
                }
            }
            ToyPotential::Banana => {
                let bend = theta[1] - theta[0] * theta[0] / 4.0;
                out[0] = -theta[0] / 4.0 + 2.0 * bend * theta[0];
                out[1] = -4.0 * bend;
            }
            _ => unreachable!("mixture potentials handled above"),
        }
    }

    fn exact_sampler(&self) -> Option<&dyn ExactSampler> {
        self.mixture.as_ref().map(|m| m as &dyn ExactSampler)
    }
}
