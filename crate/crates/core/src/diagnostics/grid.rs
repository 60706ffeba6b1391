//! Reference densities on a regular 2-D grid.

use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::linalg::{log_sum_exp, Matrix};
use crate::rng::RngStream;
use crate::targets::Target;

/// Normalized cell-centred density of a 2-D target, with quadrature moments.
#[derive(Clone, Debug)]
pub struct GroundTruthGrid {
    bbox: [f64; 4],
    resolution: usize,
    /// Row-major `density[iy * res + ix]`, normalized so `Σ density·cell_area = 1`.
    density: Vec<f64>,
    mean: [f64; 2],
    covariance: Matrix,
    cumulative: Vec<f64>,
}

impl GroundTruthGrid {
    /// Midpoint-rule quadrature of `exp(U)` on `bbox = [x_lo, x_hi, y_lo, y_hi]`.
    pub fn new<T: Target + ?Sized>(target: &T, bbox: [f64; 4], resolution: usize) -> Result<Self> {
        if target.dim() != 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                found: target.dim(),
            });
        }
        if resolution < 2 {
            return Err(invalid("resolution", "must be at least 2"));
        }
        if !(bbox[0] < bbox[1] && bbox[2] < bbox[3]) || bbox.iter().any(|v| !v.is_finite()) {
            return Err(invalid("bbox", "must be finite with lo < hi on both axes"));
        }
        let n = resolution;
        let (dx, dy) = ((bbox[1] - bbox[0]) / n as f64, (bbox[3] - bbox[2]) / n as f64);
        let mut logd = Vec::with_capacity(n * n);
        for iy in 0..n {
            let y = bbox[2] + (iy as f64 + 0.5) * dy;
            for ix in 0..n {
                let x = bbox[0] + (ix as f64 + 0.5) * dx;
                logd.push(target.log_density(&[x, y]));
            }
        }
        if logd.iter().any(|v| v.is_nan()) {
            return Err(invalid("target", "log-density is NaN on the grid"));
        }
        let log_z = log_sum_exp(&logd) + libm::log(dx * dy);
        let density: Vec<f64> = logd.iter().map(|l| libm::exp(l - log_z)).collect();

        let area = dx * dy;
        let mut mean = [0.0; 2];
        let mut cumulative = Vec::with_capacity(n * n);
        let mut acc = 0.0;
        for iy in 0..n {
            for ix in 0..n {
                let w = density[iy * n + ix] * area;
                let (x, y) = Self::centre(bbox, n, ix, iy);
                mean[0] += w * x;
                mean[1] += w * y;
                acc += w;
                cumulative.push(acc);
            }
        }
        let mut cov = Matrix::zeros(2, 2);
        for iy in 0..n {
            for ix in 0..n {
                let w = density[iy * n + ix] * area;
                let (x, y) = Self::centre(bbox, n, ix, iy);
                let d = [x - mean[0], y - mean[1]];
                for a in 0..2 {
                    for b in 0..2 {
                        cov.set(a, b, cov.get(a, b) + w * d[a] * d[b]);
                    }
                }
            }
        }
        Ok(Self {
            bbox,
            resolution,
            density,
            mean,
            covariance: cov,
            cumulative,
        })
    }

    fn centre(bbox: [f64; 4], n: usize, ix: usize, iy: usize) -> (f64, f64) {
        let dx = (bbox[1] - bbox[0]) / n as f64;
        let dy = (bbox[3] - bbox[2]) / n as f64;
        (
            bbox[0] + (ix as f64 + 0.5) * dx,
            bbox[2] + (iy as f64 + 0.5) * dy,
        )
    }

    pub fn bbox(&self) -> [f64; 4] {
        self.bbox
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn cell_area(&self) -> f64 {
        let n = self.resolution as f64;
        (self.bbox[1] - self.bbox[0]) * (self.bbox[3] - self.bbox[2]) / (n * n)
    }

    /// Cell-centre coordinates of cell `(ix, iy)`.
    pub fn cell_centre(&self, ix: usize, iy: usize) -> (f64, f64) {
        Self::centre(self.bbox, self.resolution, ix, iy)
    }

    /// Normalized density at cell `(ix, iy)`.
    pub fn density(&self, ix: usize, iy: usize) -> f64 {
        self.density[iy * self.resolution + ix]
    }

    pub fn densities(&self) -> &[f64] {
        &self.density
    }

    pub fn total_mass(&self) -> f64 {
        self.density.iter().sum::<f64>() * self.cell_area()
    }

    /// Probability mass in the outermost ring of cells.
    pub fn boundary_mass(&self) -> f64 {
        let n = self.resolution;
        let mut s = 0.0;
        for iy in 0..n {
            for ix in 0..n {
                if ix == 0 || iy == 0 || ix == n - 1 || iy == n - 1 {
                    s += self.density(ix, iy);
                }
            }
        }
        s * self.cell_area()
    }

    pub fn mean(&self) -> [f64; 2] {
        self.mean
    }

    pub fn covariance(&self) -> &Matrix {
        &self.covariance
    }

    /// Draws a cell with probability equal to its mass, then a uniform point inside it.
    pub fn sample(&self, rng: &mut RngStream) -> [f64; 2] {
        let total = *self.cumulative.last().expect("non-empty grid");
        let u = rng.uniform() * total;
        let k = self.cumulative.partition_point(|c| *c <= u).min(self.cumulative.len() - 1);
        let n = self.resolution;
        let (ix, iy) = (k % n, k / n);
        let dx = (self.bbox[1] - self.bbox[0]) / n as f64;
        let dy = (self.bbox[3] - self.bbox[2]) / n as f64;
        let x = self.bbox[0] + (ix as f64 + rng.uniform()) * dx;
        let y = self.bbox[2] + (iy as f64 + rng.uniform()) * dy;
        [x, y]
    }

    pub fn sample_n(&self, n: usize, rng: &mut RngStream) -> Matrix {
        let mut out = Matrix::zeros(n, 2);
        for i in 0..n {
            let p = self.sample(rng);
            out.row_mut(i).copy_from_slice(&p);
        }
        out
    }

    /// Density thresholds whose superlevel sets hold each requested mass fraction.
    pub fn contour_levels(&self, masses: &[f64]) -> Vec<f64> {
        let mut sorted = self.density.clone();
        sorted.sort_unstable_by(|a, b| b.total_cmp(a));
        let area = self.cell_area();
        let mut cum = Vec::with_capacity(sorted.len());
        let mut acc = 0.0;
        for d in &sorted {
            acc += d * area;
            cum.push(acc);
        }
        masses
            .iter()
            .map(|q| {
                let k = cum.partition_point(|c| *c < *q).min(sorted.len() - 1);
                sorted[k]
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::targets::{StandardQuadratic, ToyPotential, ToyTarget};

    #[test]
    fn unit_gaussian_moments() {
        let g = GroundTruthGrid::new(&StandardQuadratic { dim: 2 }, [-8.0, 8.0, -8.0, 8.0], 400).unwrap();
        assert!((g.total_mass() - 1.0).abs() < 1e-12);
        let m = g.mean();
        assert!(m[0].abs() < 1e-4 && m[1].abs() < 1e-4);
        let c = g.covariance();
        assert!((c.get(0, 0) - 1.0).abs() < 1e-3);
        assert!((c.get(1, 1) - 1.0).abs() < 1e-3);
        assert!(c.get(0, 1).abs() < 1e-4);
    }

    #[test]
    fn toy_boxes_hold_the_mass() {
        for kind in ToyPotential::ALL {
            let g = GroundTruthGrid::new(&ToyTarget::new(kind), kind.bounding_box(), 400).unwrap();
            assert!((g.total_mass() - 1.0).abs() < 1e-6, "{kind}");
            assert!(g.boundary_mass() < 1e-6, "{kind} boundary mass {}", g.boundary_mass());
        }
    }

    #[test]
    fn gaussian_contour_levels() {
        let g = GroundTruthGrid::new(&StandardQuadratic { dim: 2 }, [-8.0, 8.0, -8.0, 8.0], 400).unwrap();
        let qs = [0.1, 0.5, 0.9];
        let levels = g.contour_levels(&qs);
        for (q, l) in qs.iter().zip(&levels) {
            let exact = (1.0 - q) / (2.0 * core::f64::consts::PI);
            assert!((l - exact).abs() / exact < 0.01, "q={q}: {l} vs {exact}");
        }
    }

    #[test]
    fn samples_follow_density() {
        let g = GroundTruthGrid::new(&StandardQuadratic { dim: 2 }, [-8.0, 8.0, -8.0, 8.0], 200).unwrap();
        let mut rng = RngStream::new(2);
        let s = g.sample_n(20_000, &mut rng);
        let mean_x: f64 = (0..s.rows()).map(|i| s.get(i, 0)).sum::<f64>() / s.rows() as f64;
        let var_x: f64 = (0..s.rows()).map(|i| s.get(i, 0).powi(2)).sum::<f64>() / s.rows() as f64;
        assert!(mean_x.abs() < 0.03);
        assert!((var_x - 1.0).abs() < 0.05);
    }

    #[test]
    fn rejects_bad_grids() {
        let t = StandardQuadratic { dim: 2 };
        assert!(GroundTruthGrid::new(&t, [1.0, -1.0, 0.0, 1.0], 10).is_err());
        assert!(GroundTruthGrid::new(&t, [-1.0, 1.0, -1.0, 1.0], 1).is_err());
        assert!(GroundTruthGrid::new(&StandardQuadratic { dim: 3 }, [-1.0, 1.0, -1.0, 1.0], 10).is_err());
    }
}
