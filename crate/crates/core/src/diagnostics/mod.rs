//! Sample-quality metrics and numerical self-checks.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::ensemble::ParticleEnsemble;
use crate::error::{invalid, Error, Result};
use crate::kernels::RbfKernel;
use crate::linalg::{norm, sq_dist, Matrix};
use crate::rng::RngStream;
use crate::samplers::{ensemble_gradients, svgd_direction_from_grads};
use crate::targets::{log_sigmoid, LogisticRegression, LogisticRegressionData, Target};

mod grid;

pub use grid::GroundTruthGrid;

/// One scalar metric at one iteration.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricRecord {
    pub iteration: usize,
    pub metric: String,
    pub value: f64,
}

impl MetricRecord {
    pub fn new(iteration: usize, metric: impl Into<String>, value: f64) -> Result<Self> {
        let metric = metric.into();
        if !value.is_finite() {
            return Err(invalid("metric", format!("{metric} is not finite at iteration {iteration}")));
        }
        Ok(Self { iteration, metric, value })
    }
}

fn mean_kernel(kernel: &RbfKernel, a: &Matrix, b: &Matrix) -> f64 {
    let mut s = 0.0;
    for x in a.iter_rows() {
        for y in b.iter_rows() {
            s += kernel.eval_sq(sq_dist(x, y));
        }
    }
    s / (a.rows() * b.rows()) as f64
}

/// Biased (V-statistic) squared MMD between the particles and a sample set.
/// Clamped at zero against rounding.
pub fn mmd_squared(a: &ParticleEnsemble, b: &Matrix, kernel: &RbfKernel) -> Result<f64> {
    if b.cols() != a.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.cols(),
        });
    }
    if b.rows() == 0 {
        return Err(Error::EmptyEnsemble);
    }
    let x = a.positions();
    if x.as_slice() == b.as_slice() {
        return Ok(0.0);
    }
    let v = mean_kernel(kernel, x, x) - 2.0 * mean_kernel(kernel, x, b) + mean_kernel(kernel, b, b);
    Ok(v.max(0.0))
}

/// A fixed reference sample with its `mean κ(b, b)` term computed once, so
/// repeated MMD evaluations against it cost `O(M·N)` instead of `O(N²)`.
#[derive(Clone, Debug)]
pub struct MmdReference {
    samples: Matrix,
    kernel: RbfKernel,
    self_term: f64,
}

impl MmdReference {
    pub fn new(samples: Matrix, kernel: RbfKernel) -> Result<Self> {
        if samples.rows() == 0 {
            return Err(Error::EmptyEnsemble);
        }
        let self_term = mean_kernel(&kernel, &samples, &samples);
        Ok(Self {
            samples,
            kernel,
            self_term,
        })
    }

    pub fn samples(&self) -> &Matrix {
        &self.samples
    }

    pub fn kernel(&self) -> &RbfKernel {
        &self.kernel
    }

    /// Same value as [`mmd_squared`] against the stored samples.
    pub fn mmd_squared(&self, a: &ParticleEnsemble) -> Result<f64> {
        let b = &self.samples;
        if b.cols() != a.dim() {
            return Err(Error::DimensionMismatch {
                expected: a.dim(),
                found: b.cols(),
            });
        }
        let x = a.positions();
        if x.as_slice() == b.as_slice() {
            return Ok(0.0);
        }
        let k = &self.kernel;
        let v = mean_kernel(k, x, x) - 2.0 * mean_kernel(k, x, b) + self.self_term;
        Ok(v.max(0.0))
    }
}

/// `(‖mean - μ‖, ‖cov - Σ‖_F)` against the grid's quadrature moments.
pub fn moment_errors(ensemble: &ParticleEnsemble, grid: &GroundTruthGrid) -> Result<(f64, f64)> {
    if ensemble.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: ensemble.dim(),
        });
    }
    let mean = ensemble.mean();
    let truth = grid.mean();
    let mean_err = norm(&[mean[0] - truth[0], mean[1] - truth[1]]);
    let mut diff = ensemble.covariance();
    diff.add_scaled(-1.0, grid.covariance())?;
    Ok((mean_err, diff.frobenius_norm()))
}

/// Fraction of particles within `radius` of each mode. Balls may not overlap,
/// so every particle counts toward at most one mode.
pub fn mode_coverage(ensemble: &ParticleEnsemble, modes: &[Vec<f64>], radius: f64) -> Result<Vec<f64>> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(invalid("radius", "must be positive and finite"));
    }
    for m in modes {
        if m.len() != ensemble.dim() {
            return Err(Error::DimensionMismatch {
                expected: ensemble.dim(),
                found: m.len(),
            });
        }
    }
    let mut min_sep = f64::INFINITY;
    for i in 0..modes.len() {
        for j in i + 1..modes.len() {
            min_sep = min_sep.min(libm::sqrt(sq_dist(&modes[i], &modes[j])));
        }
    }
    if radius >= min_sep / 2.0 {
        return Err(Error::OverlappingModes {
            radius,
            limit: min_sep / 2.0,
        });
    }
    let r2 = radius * radius;
    let mut counts = vec![0usize; modes.len()];
    for p in ensemble.positions().iter_rows() {
        if let Some(k) = modes.iter().position(|m| sq_dist(p, m) <= r2) {
            counts[k] += 1;
        }
    }
    let m = ensemble.len() as f64;
    Ok(counts.into_iter().map(|c| c as f64 / m).collect())
}

/// Fraction of particles whose nearest mode is each listed mode (ties go to
/// the earlier mode). Shares sum to one.
pub fn mode_shares(ensemble: &ParticleEnsemble, modes: &[Vec<f64>]) -> Result<Vec<f64>> {
    if modes.is_empty() {
        return Err(invalid("modes", "need at least one mode"));
    }
    if let Some(m) = modes.iter().find(|m| m.len() != ensemble.dim()) {
        return Err(Error::DimensionMismatch {
            expected: ensemble.dim(),
            found: m.len(),
        });
    }
    let mut counts = vec![0usize; modes.len()];
    for p in ensemble.positions().iter_rows() {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (k, m) in modes.iter().enumerate() {
            let d = sq_dist(p, m);
            if d < best_d {
                best = k;
                best_d = d;
            }
        }
        counts[best] += 1;
    }
    let m = ensemble.len() as f64;
    Ok(counts.into_iter().map(|c| c as f64 / m).collect())
}

/// Norm of the Monte-Carlo average of the SVGD interaction over `m` exact
/// target samples. Zero in expectation by Stein's identity.
pub fn stein_check<T: Target + ?Sized>(
    target: &T,
    kernel: &RbfKernel,
    m: usize,
    rng: &mut RngStream,
) -> Result<f64> {
    let sampler = target.exact_sampler().ok_or(Error::NoExactSampler)?;
    if m == 0 {
        return Err(Error::EmptyEnsemble);
    }
    let r = target.dim();
    let mut data = Vec::with_capacity(m * r);
    for _ in 0..m {
        data.extend(sampler.sample(rng));
    }
    let ensemble = ParticleEnsemble::new(Matrix::from_vec(m, r, data)?)?;
    stein_mean_norm(target, kernel, &ensemble)
}

/// Norm of the mean SVGD direction over a given ensemble.
pub fn stein_mean_norm<T: Target + ?Sized>(
    target: &T,
    kernel: &RbfKernel,
    ensemble: &ParticleEnsemble,
) -> Result<f64> {
    let grads = ensemble_gradients(target, ensemble, None)?;
    let dir = svgd_direction_from_grads(ensemble, kernel, &grads)?;
    let m = ensemble.len() as f64;
    let mut mean = vec![0.0; ensemble.dim()];
    for row in dir.iter_rows() {
        for (a, v) in mean.iter_mut().zip(row) {
            *a += v / m;
        }
    }
    Ok(norm(&mean))
}

/// Worst `|analytic - central difference| / (|analytic| + 1e-12)` over all
/// points and coordinates. The difference step for coordinate `k` is
/// `step · max(1, |θ_k|)`.
pub fn finite_diff_check<T: Target + ?Sized>(target: &T, points: &[Vec<f64>], step: f64) -> Result<f64> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(invalid("step", "must be positive and finite"));
    }
    let r = target.dim();
    let mut grad = vec![0.0; r];
    let mut worst: f64 = 0.0;
    for p in points {
        if p.len() != r {
            return Err(Error::DimensionMismatch {
                expected: r,
                found: p.len(),
            });
        }
        target.grad_log_density(p, &mut grad);
        let mut q = p.clone();
        for k in 0..r {
            let eps = step * p[k].abs().max(1.0);
            q[k] = p[k] + eps;
            let up = target.log_density(&q);
            q[k] = p[k] - eps;
            let down = target.log_density(&q);
            q[k] = p[k];
            let fd = (up - down) / (2.0 * eps);
            worst = worst.max((grad[k] - fd).abs() / (grad[k].abs() + 1e-12));
        }
    }
    Ok(worst)
}

/// Ensemble predictive accuracy and mean log-likelihood on `data`, with the
/// predictive probability averaged over particles.
pub fn ensemble_predict_logreg(
    ensemble: &ParticleEnsemble,
    model: &LogisticRegression,
    data: &LogisticRegressionData,
) -> Result<(f64, f64)> {
    if ensemble.dim() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            found: ensemble.dim(),
        });
    }
    if data.feature_dim() != model.data().feature_dim() {
        return Err(Error::DimensionMismatch {
            expected: model.data().feature_dim(),
            found: data.feature_dim(),
        });
    }
    let m = ensemble.len() as f64;
    let mut correct = 0usize;
    let mut ll = 0.0;
    for i in 0..data.len() {
        let x = data.features.row(i);
        let y = data.labels[i];
        let mut p_pos = 0.0;
        let mut log_terms = Vec::with_capacity(ensemble.len());
        for theta in ensemble.positions().iter_rows() {
            let z = model.logit(x, theta);
            p_pos += model.predict_prob(x, theta) / m;
            log_terms.push(log_sigmoid(y * z));
        }
        if (p_pos > 0.5 && y > 0.0) || (p_pos < 0.5 && y < 0.0) {
            correct += 1;
        }
        // log of the averaged probability of the observed label
        ll += crate::linalg::log_sum_exp(&log_terms) - libm::log(m);
    }
    let n = data.len() as f64;
    Ok((correct as f64 / n, ll / n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::targets::{synth_logreg, GaussianMixture, StandardQuadratic, ToyPotential, ToyTarget};
    use proptest::prelude::*;

    #[test]
    fn mmd_hand_value() {
        let a = ParticleEnsemble::from_rows(&[[0.0]]).unwrap();
        let b = Matrix::from_rows(&[[1.0]]).unwrap();
        let k = RbfKernel::new(1.0).unwrap();
        let v = mmd_squared(&a, &b, &k).unwrap();
        assert!((v - (2.0 - 2.0 * libm::exp(-1.0))).abs() < 1e-15);
        assert!((v - 1.2642).abs() < 1e-4);
    }

    #[test]
    fn moment_errors_single_particle_at_mean() {
        let grid = GroundTruthGrid::new(&StandardQuadratic { dim: 2 }, [-8.0, 8.0, -8.0, 8.0], 100).unwrap();
        let mu = grid.mean();
        let e = ParticleEnsemble::from_rows(&[mu]).unwrap();
        let (me, ce) = moment_errors(&e, &grid).unwrap();
        assert_eq!(me, 0.0);
        assert!((ce - grid.covariance().frobenius_norm()).abs() < 1e-15);
    }

    #[test]
    fn moment_errors_exact_samples_within_clt_bound() {
        let target = ToyTarget::new(ToyPotential::BimodalGauss);
        let grid = GroundTruthGrid::new(&target, ToyPotential::BimodalGauss.bounding_box(), 400).unwrap();
        let mut rng = RngStream::new(10);
        let m = 10_000;
        let e = ParticleEnsemble::new(grid.sample_n(m, &mut rng)).unwrap();
        let (me, _) = moment_errors(&e, &grid).unwrap();
        let c = grid.covariance();
        let max_std = libm::sqrt(c.get(0, 0).max(c.get(1, 1)));
        assert!(me <= 4.0 * max_std / libm::sqrt(m as f64), "{me}");
    }

    #[test]
    fn symmetric_ensemble_has_zero_mean_error_on_symmetric_truth() {
        let target = ToyTarget::new(ToyPotential::BimodalGauss);
        let grid = GroundTruthGrid::new(&target, [-8.0, 8.0, -8.0, 8.0], 200).unwrap();
        let e = ParticleEnsemble::from_rows(&[[2.0, 0.5], [-2.0, -0.5], [1.0, -1.0], [-1.0, 1.0]]).unwrap();
        let (me, _) = moment_errors(&e, &grid).unwrap();
        assert!(me < 1e-12, "{me}");
    }

    #[test]
    fn coverage_examples() {
        let modes = alloc::vec![alloc::vec![2.0, 0.0], alloc::vec![-2.0, 0.0]];
        let all_one = ParticleEnsemble::from_rows(&[[2.0, 0.0], [2.1, 0.0]]).unwrap();
        assert_eq!(mode_coverage(&all_one, &modes, 0.5).unwrap(), alloc::vec![1.0, 0.0]);
        let split = ParticleEnsemble::from_rows(&[[2.0, 0.0], [-2.0, 0.1]]).unwrap();
        assert_eq!(mode_coverage(&split, &modes, 0.5).unwrap(), alloc::vec![0.5, 0.5]);
        assert!(matches!(
            mode_coverage(&split, &modes, 2.0),
            Err(Error::OverlappingModes { .. })
        ));
        assert!(mode_coverage(&split, &modes, 0.0).is_err());
    }

    #[test]
    fn shares_split_by_nearest_mode() {
        let modes = alloc::vec![alloc::vec![2.0, 0.0], alloc::vec![-2.0, 0.0]];
        let e = ParticleEnsemble::from_rows(&[[5.0, 1.0], [0.5, 0.0], [-0.1, 3.0], [0.0, 0.0]]).unwrap();
        assert_eq!(mode_shares(&e, &modes).unwrap(), alloc::vec![0.75, 0.25]);
        assert!(mode_shares(&e, &[]).is_err());
    }

    #[test]
    fn cached_reference_matches_direct_mmd() {
        let mut rng = RngStream::new(9);
        let b = rng.gaussian_noise(300, 2);
        let a = ParticleEnsemble::new(rng.gaussian_noise(40, 2)).unwrap();
        let k = RbfKernel::new(0.7).unwrap();
        let r = MmdReference::new(b.clone(), k).unwrap();
        let direct = mmd_squared(&a, &b, &k).unwrap();
        assert!((r.mmd_squared(&a).unwrap() - direct).abs() < 1e-14);
    }

    #[test]
    fn coverage_of_uniform_ensemble_is_area_ratio() {
        let mut rng = RngStream::new(6);
        let m = 200_000;
        let rows: Vec<[f64; 2]> = (0..m)
            .map(|_| [rng.uniform_range(-4.0, 4.0), rng.uniform_range(-4.0, 4.0)])
            .collect();
        let e = ParticleEnsemble::from_rows(&rows).unwrap();
        let modes: Vec<Vec<f64>> = ToyPotential::QuadModalGauss.modes().iter().map(|m| m.to_vec()).collect();
        let expected = core::f64::consts::PI * 0.25 / 64.0;
        let sd = libm::sqrt(expected * (1.0 - expected) / m as f64);
        for f in mode_coverage(&e, &modes, 0.5).unwrap() {
            assert!((f - expected).abs() < 5.0 * sd, "{f} vs {expected}");
        }
    }

    #[test]
    fn stein_check_examples() {
        let target = StandardQuadratic { dim: 2 };
        let k = RbfKernel::new(1.0).unwrap();
        let v = stein_check(&target, &k, 10_000, &mut RngStream::new(3)).unwrap();
        assert!(v <= 0.05, "{v}");
        let at_mode = ParticleEnsemble::from_rows(&[[0.0, 0.0]]).unwrap();
        assert_eq!(stein_mean_norm(&target, &k, &at_mode).unwrap(), 0.0);
        let no_sampler = ToyTarget::new(ToyPotential::Banana);
        assert_eq!(
            stein_check(&no_sampler, &k, 10, &mut RngStream::new(0)),
            Err(Error::NoExactSampler)
        );
    }

    #[test]
    fn finite_diff_on_quadratic_and_mixture() {
        let mut rng = RngStream::new(5);
        let pts: Vec<Vec<f64>> = (0..50)
            .map(|_| (0..3).map(|_| rng.uniform_range(-3.0, 3.0)).collect())
            .collect();
        assert!(finite_diff_check(&StandardQuadratic { dim: 3 }, &pts, 1e-3).unwrap() <= 1e-10);
        let gmm = GaussianMixture::isotropic(&[&[1.0, 0.0, -1.0][..], &[-1.0, 2.0, 0.5][..]], 0.8).unwrap();
        assert!(finite_diff_check(&gmm, &pts, 1e-5).unwrap() <= 1e-5);
        assert!(finite_diff_check(&gmm, &pts, 0.0).is_err());
    }

    #[test]
    fn prediction_examples() {
        let mut rng = RngStream::new(2);
        let data = synth_logreg(200, 4, 3.0, &mut rng).unwrap();
        let model = LogisticRegression::new(data.clone());
        let theta = [0.5, -0.3, 0.2, 0.8, 0.1];
        let single = ParticleEnsemble::from_rows(&[theta]).unwrap();
        let (acc, ll) = ensemble_predict_logreg(&single, &model, &data).unwrap();
        assert!((ll - model.log_likelihood(&theta) / 200.0).abs() < 1e-12);
        assert!((0.0..=1.0).contains(&acc));

        let neg: Vec<f64> = theta.iter().map(|v| -v).collect();
        let pair = ParticleEnsemble::from_rows(&[theta.to_vec(), neg]).unwrap();
        let (_, ll) = ensemble_predict_logreg(&pair, &model, &data).unwrap();
        assert!((ll - libm::log(0.5)).abs() < 1e-12);

        let map = model.map_estimate(100, 1e-10).unwrap();
        let e = ParticleEnsemble::from_rows(&[map]).unwrap();
        let sep = synth_logreg(500, 4, 10.0, &mut rng).unwrap();
        let sep_model = LogisticRegression::new(sep.clone());
        let fit = ParticleEnsemble::from_rows(&[sep_model.map_estimate(100, 1e-10).unwrap()]).unwrap();
        assert!(ensemble_predict_logreg(&fit, &sep_model, &sep).unwrap().0 >= 0.99);
        assert!(ensemble_predict_logreg(&e, &model, &data).is_ok());
    }

    #[test]
    fn metric_records_must_be_finite() {
        assert!(MetricRecord::new(3, "mmd", 0.5).is_ok());
        assert!(MetricRecord::new(3, "mmd", f64::NAN).is_err());
    }

    proptest! {
        #[test]
        fn mmd_nonnegative_symmetric_and_coincident(
            a in prop::collection::vec(prop::collection::vec(-3.0f64..3.0, 2), 1..8),
            b in prop::collection::vec(prop::collection::vec(-3.0f64..3.0, 2), 1..8),
            h in 0.1f64..5.0,
        ) {
            let k = RbfKernel::new(h).unwrap();
            let ea = ParticleEnsemble::from_rows(&a).unwrap();
            let eb = ParticleEnsemble::from_rows(&b).unwrap();
            let ab = mmd_squared(&ea, eb.positions(), &k).unwrap();
            let ba = mmd_squared(&eb, ea.positions(), &k).unwrap();
            prop_assert!(ab >= 0.0);
            prop_assert!((ab - ba).abs() < 1e-12);
            prop_assert_eq!(mmd_squared(&ea, ea.positions(), &k).unwrap(), 0.0);
        }

        #[test]
        fn mixture_log_likelihood_respects_jensen_bound(
            thetas in prop::collection::vec(prop::collection::vec(-2.0f64..2.0, 3), 1..6),
            seed in 0u64..100,
        ) {
            let data = synth_logreg(30, 2, 1.5, &mut RngStream::new(seed)).unwrap();
            let model = LogisticRegression::new(data.clone());
            let e = ParticleEnsemble::from_rows(&thetas).unwrap();
            let (_, ll) = ensemble_predict_logreg(&e, &model, &data).unwrap();
            let worst = thetas.iter().map(|t| model.log_likelihood(t) / 30.0).fold(f64::INFINITY, f64::min);
            prop_assert!(ll >= worst - libm::log(thetas.len() as f64) - 1e-12);
        }
    }
}
