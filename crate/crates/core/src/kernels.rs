//! RBF kernel `κ(θ, θ') = exp(-‖θ - θ'‖² / h)` and the median bandwidth heuristic.

use alloc::format;
use alloc::vec::Vec;

use crate::config::BandwidthPolicy;
use crate::ensemble::ParticleEnsemble;
use crate::error::{invalid, Error, Result};
use crate::linalg::{sq_dist, Matrix};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RbfKernel {
    bandwidth: f64,
}

impl RbfKernel {
    pub fn new(bandwidth: f64) -> Result<Self> {
        if bandwidth > 0.0 && bandwidth.is_finite() {
            Ok(Self { bandwidth })
        } else {
            Err(invalid(
                "bandwidth",
                format!("must be positive and finite, got {bandwidth}"),
            ))
        }
    }

    /// Resolves a bandwidth policy against the current ensemble.
    pub fn from_policy(
        policy: BandwidthPolicy,
        ensemble: &ParticleEnsemble,
        floor: f64,
    ) -> Result<Self> {
        match policy {
            BandwidthPolicy::Fixed(h) => Self::new(h),
            BandwidthPolicy::Median => Self::new(median_bandwidth(ensemble, floor)?),
        }
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    #[inline]
    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        self.eval_sq(sq_dist(a, b))
    }

    #[inline]
    pub fn eval_sq(&self, sq_distance: f64) -> f64 {
        libm::exp(-sq_distance / self.bandwidth)
    }

    /// `∇_a κ(a, b) = -(2/h) (a - b) κ(a, b)`, written into `out`.
    pub fn grad_first_into(&self, a: &[f64], b: &[f64], out: &mut [f64]) {
        let k = self.eval(a, b);
        let c = -2.0 * k / self.bandwidth;
        for ((o, x), y) in out.iter_mut().zip(a).zip(b) {
            *o = c * (x - y);
        }
    }

    pub fn grad_first(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        let mut out = alloc::vec![0.0; a.len()];
        self.grad_first_into(a, b, &mut out);
        out
    }

    pub fn gram(&self, ensemble: &ParticleEnsemble) -> Matrix {
        let m = ensemble.len();
        let mut k = Matrix::zeros(m, m);
        for i in 0..m {
            for j in 0..m {
                k.set(i, j, self.eval(ensemble.particle(i), ensemble.particle(j)));
            }
        }
        k
    }
}

/// `max(med², floor) / log M`, where `med` is the median of the `M(M-1)/2`
/// distinct pairwise distances (lower middle element averaged with the upper
/// one when the count is even).
pub fn median_bandwidth(ensemble: &ParticleEnsemble, floor: f64) -> Result<f64> {
    let m = ensemble.len();
    if m < 2 {
        return Err(Error::TooFewParticles(m));
    }
    let mut dists = Vec::with_capacity(m * (m - 1) / 2);
    for i in 0..m {
        for j in i + 1..m {
            dists.push(libm::sqrt(sq_dist(ensemble.particle(i), ensemble.particle(j))));
        }
    }
    let med = median_in_place(&mut dists);
    Ok((med * med).max(floor) / libm::log(m as f64))
}

fn median_in_place(values: &mut [f64]) -> f64 {
    let n = values.len();
    let (lower, upper, _) = values.select_nth_unstable_by(n / 2, f64::total_cmp);
    let upper = *upper;
    if n % 2 == 1 {
        upper
    } else {
        let below = lower.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (below + upper)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::cholesky;
    use crate::rng::RngStream;
    use proptest::prelude::*;

    const E_INV: f64 = 0.367_879_441_171_442_3;

    #[test]
    fn eval_examples() {
        let k = RbfKernel::new(2.0).unwrap();
        assert_eq!(k.eval(&[0.3, 0.1], &[0.3, 0.1]), 1.0);
        assert!((k.eval(&[0.0, 0.0], &[1.0, 1.0]) - E_INV).abs() < 1e-15);
        let k = RbfKernel::new(0.7).unwrap();
        assert!((k.eval_sq(0.7) - E_INV).abs() < 1e-15);
    }

    #[test]
    fn grad_examples() {
        let k = RbfKernel::new(1.3).unwrap();
        assert_eq!(k.grad_first(&[0.5, -1.0], &[0.5, -1.0]), alloc::vec![0.0, 0.0]);
        let a = [0.2, 1.1, -0.4];
        let b = [-0.7, 0.3, 0.9];
        let ga = k.grad_first(&a, &b);
        let gb = k.grad_first(&b, &a);
        for (x, y) in ga.iter().zip(&gb) {
            assert_eq!(*x, -*y);
        }
    }

    #[test]
    fn grad_matches_finite_differences() {
        let mut rng = RngStream::new(3);
        for _ in 0..50 {
            let h = rng.uniform_range(0.2, 3.0);
            let k = RbfKernel::new(h).unwrap();
            let a: Vec<f64> = (0..3).map(|_| rng.standard_normal()).collect();
            let b: Vec<f64> = (0..3).map(|_| rng.standard_normal()).collect();
            let g = k.grad_first(&a, &b);
            for d in 0..3 {
                let eps = 1e-6;
                let mut ap = a.clone();
                let mut am = a.clone();
                ap[d] += eps;
                am[d] -= eps;
                let fd = (k.eval(&ap, &b) - k.eval(&am, &b)) / (2.0 * eps);
                let rel = (fd - g[d]).abs() / (g[d].abs() + 1e-12);
                assert!(rel < 1e-6 || (fd - g[d]).abs() < 1e-10, "rel {rel}");
            }
        }
    }

    #[test]
    fn median_examples() {
        let two = ParticleEnsemble::from_rows(&[[0.0, 0.0], [3.0, 4.0]]).unwrap();
        assert!((median_bandwidth(&two, 1e-8).unwrap() - 25.0 / libm::log(2.0)).abs() < 1e-12);

        let same = ParticleEnsemble::from_rows(&[[1.0, 1.0]; 5]).unwrap();
        assert!((median_bandwidth(&same, 1e-8).unwrap() - 1e-8 / libm::log(5.0)).abs() < 1e-22);

        // distances {1, 2, 3}: med = 2
        let line = ParticleEnsemble::from_rows(&[[0.0], [1.0], [3.0]]).unwrap();
        let h = median_bandwidth(&line, 1e-8).unwrap();
        assert!((h - 4.0 / libm::log(3.0)).abs() < 1e-12);
        assert!((h - 3.6410).abs() < 1e-4);

        let one = ParticleEnsemble::from_rows(&[[0.0]]).unwrap();
        assert_eq!(median_bandwidth(&one, 1e-8), Err(Error::TooFewParticles(1)));
    }

    #[test]
    fn gram_is_positive_definite_for_distinct_points() {
        let mut rng = RngStream::new(11);
        for m in 2..=10 {
            let pts: Vec<[f64; 2]> = (0..m)
                .map(|_| [rng.standard_normal(), rng.standard_normal()])
                .collect();
            let e = ParticleEnsemble::from_rows(&pts).unwrap();
            let k = RbfKernel::from_policy(BandwidthPolicy::Median, &e, 1e-8).unwrap();
            cholesky(&k.gram(&e)).expect("gram matrix should be positive definite");
        }
    }

    proptest! {
        #[test]
        fn symmetric_and_bounded(
            a in proptest::collection::vec(-20.0f64..20.0, 2),
            b in proptest::collection::vec(-20.0f64..20.0, 2),
            h in 0.01f64..50.0,
        ) {
            let k = RbfKernel::new(h).unwrap();
            let v = k.eval(&a, &b);
            prop_assert_eq!(v, k.eval(&b, &a));
            prop_assert!(v <= 1.0 && v >= 0.0);
            // strictly positive unless exp underflows
            if sq_dist(&a, &b) / h < 700.0 {
                prop_assert!(v > 0.0);
            }
        }

        #[test]
        fn median_invariant_to_permutation_and_translation(
            pts in proptest::collection::vec(proptest::collection::vec(-5.0f64..5.0, 2), 2..10),
            shift in proptest::collection::vec(-10.0f64..10.0, 2),
            rot in 0usize..10,
        ) {
            let e = ParticleEnsemble::from_rows(&pts).unwrap();
            let h = median_bandwidth(&e, 1e-8).unwrap();
            let mut permuted = pts.clone();
            let len = permuted.len();
            permuted.rotate_left(rot % len);
            permuted.reverse();
            let hp = median_bandwidth(&ParticleEnsemble::from_rows(&permuted).unwrap(), 1e-8).unwrap();
            prop_assert_eq!(h, hp);
            let shifted: Vec<Vec<f64>> = pts
                .iter()
                .map(|p| p.iter().zip(&shift).map(|(x, s)| x + s).collect())
                .collect();
            let ht = median_bandwidth(&ParticleEnsemble::from_rows(&shifted).unwrap(), 1e-8).unwrap();
            prop_assert!((h - ht).abs() <= 1e-9 * (1.0 + h));
        }
    }
}
