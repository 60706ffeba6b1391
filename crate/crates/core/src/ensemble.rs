use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// `M` equally weighted particles in `r` dimensions: the empirical measure
/// `(1/M) Σ δ(θ⁽ⁱ⁾)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ParticleEnsemble {
    positions: Matrix,
}

impl ParticleEnsemble {
    pub fn new(positions: Matrix) -> Result<Self> {
        if positions.rows() == 0 || positions.cols() == 0 {
            return Err(Error::EmptyEnsemble);
        }
        for i in 0..positions.rows() {
            if let Some(dim) = positions.row(i).iter().position(|x| !x.is_finite()) {
                return Err(Error::NonFiniteCoordinate { particle: i, dim });
            }
        }
        Ok(Self { positions })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        Self::new(Matrix::from_rows(rows)?)
    }

    /// Number of particles `M`.
    pub fn len(&self) -> usize {
        self.positions.rows()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Dimension `r`.
    pub fn dim(&self) -> usize {
        self.positions.cols()
    }

    pub fn positions(&self) -> &Matrix {
        &self.positions
    }

    pub fn particle(&self, i: usize) -> &[f64] {
        self.positions.row(i)
    }

    pub fn into_positions(self) -> Matrix {
        self.positions
    }

    /// Uniform weights, each exactly `1/M`.
    pub fn weights(&self) -> Vec<f64> {
        vec![1.0 / self.len() as f64; self.len()]
    }

    pub fn mean(&self) -> Vec<f64> {
        let m = self.len() as f64;
        let mut mean = vec![0.0; self.dim()];
        for row in self.positions.iter_rows() {
            for (acc, x) in mean.iter_mut().zip(row) {
                *acc += x;
            }
        }
        mean.iter_mut().for_each(|x| *x /= m);
        mean
    }

    /// Population covariance (divides by `M`).
    pub fn covariance(&self) -> Matrix {
        let mean = self.mean();
        let r = self.dim();
        let mut cov = Matrix::zeros(r, r);
        for row in self.positions.iter_rows() {
            for a in 0..r {
                let da = row[a] - mean[a];
                for b in 0..r {
                    let v = cov.get(a, b) + da * (row[b] - mean[b]);
                    cov.set(a, b, v);
                }
            }
        }
        cov.scale(1.0 / self.len() as f64);
        cov
    }

    /// Ensemble after `positions += step * direction`; fails on non-finite results.
    pub fn advanced(&self, step: f64, direction: &Matrix) -> Result<Self> {
        let mut next = self.positions.clone();
        next.add_scaled(step, direction)?;
        Self::new(next)
    }

    /// Reorders particles so that particle `i` of the result is particle `perm[i]` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                found: perm.len(),
            });
        }
        let rows: Vec<&[f64]> = perm.iter().map(|&p| self.particle(p)).collect();
        Self::from_rows(&rows)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_are_uniform() {
        let e = ParticleEnsemble::from_rows(&[[0.0], [1.0], [2.0]]).unwrap();
        let w = e.weights();
        assert!(w.iter().all(|&x| x == 1.0 / 3.0));
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_empty_and_non_finite() {
        assert_eq!(
            ParticleEnsemble::new(Matrix::zeros(0, 2)),
            Err(Error::EmptyEnsemble)
        );
        assert_eq!(
            ParticleEnsemble::from_rows(&[[0.0, f64::NAN]]),
            Err(Error::NonFiniteCoordinate {
                particle: 0,
                dim: 1
            })
        );
    }

    #[test]
    fn moments_of_two_points() {
        let e = ParticleEnsemble::from_rows(&[[1.0, 0.0], [-1.0, 2.0]]).unwrap();
        assert_eq!(e.mean(), vec![0.0, 1.0]);
        let c = e.covariance();
        assert_eq!(c.as_slice(), &[1.0, -1.0, -1.0, 1.0]);
    }
}
