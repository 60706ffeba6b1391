//! Turns target specifications into runnable targets and their ground truth.

use partopt_core::diagnostics::GroundTruthGrid;
use partopt_core::targets::{
    synth_logreg, ExactSampler, GaussianMixture, GaussianMixtureSpec, LogisticRegression, LogisticRegressionData,
    ToyPotential, ToyTarget,
};
use partopt_core::{Matrix, RngStream, Target};

use crate::dataset;
use crate::error::{HarnessError, Result};
use crate::spec::{LogisticSpec, TargetSpec};

/// A constructed target. Logistic targets carry their held-out test split.
#[derive(Clone, Debug)]
pub enum BuiltTarget {
    Toy(ToyTarget),
    Gaussian(GaussianMixture),
    Logistic {
        model: LogisticRegression,
        test: LogisticRegressionData,
    },
}

impl BuiltTarget {
    fn inner(&self) -> &dyn Target {
        match self {
            BuiltTarget::Toy(t) => t,
            BuiltTarget::Gaussian(g) => g,
            BuiltTarget::Logistic { model, .. } => model,
        }
    }

    /// Isolated modes used by the coverage and share metrics.
    pub fn modes(&self) -> Vec<Vec<f64>> {
        match self {
            BuiltTarget::Toy(t) => t.kind().modes().iter().map(|m| m.to_vec()).collect(),
            BuiltTarget::Gaussian(g) => g.spec().means.iter_rows().map(<[f64]>::to_vec).collect(),
            BuiltTarget::Logistic { .. } => Vec::new(),
        }
    }

    /// Quadrature box for 2-D targets.
    pub fn bounding_box(&self) -> Option<[f64; 4]> {
        match self {
            BuiltTarget::Toy(t) => Some(t.kind().bounding_box()),
            BuiltTarget::Gaussian(g) if g.dim() == 2 => {
                let spec = g.spec();
                let mut b = [f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY];
                for c in 0..spec.weights.len() {
                    for d in 0..2 {
                        let reach = 8.0 * spec.variances.get(c, d).sqrt();
                        let m = spec.means.get(c, d);
                        b[2 * d] = b[2 * d].min(m - reach);
                        b[2 * d + 1] = b[2 * d + 1].max(m + reach);
                    }
                }
                Some(b)
            }
            _ => None,
        }
    }

    pub fn grid(&self, resolution: usize) -> Result<Option<GroundTruthGrid>> {
        match self.bounding_box() {
            Some(b) => Ok(Some(GroundTruthGrid::new(self, b, resolution)?)),
            None => Ok(None),
        }
    }
}

impl Target for BuiltTarget {
    fn dim(&self) -> usize {
        self.inner().dim()
    }
    fn log_density(&self, theta: &[f64]) -> f64 {
        self.inner().log_density(theta)
    }
    fn grad_log_density(&self, theta: &[f64], out: &mut [f64]) {
        self.inner().grad_log_density(theta, out)
    }
    fn data_len(&self) -> Option<usize> {
        self.inner().data_len()
    }
    fn stochastic_grad(&self, theta: &[f64], batch: &[usize], out: &mut [f64]) {
        self.inner().stochastic_grad(theta, batch, out)
    }
    fn exact_sampler(&self) -> Option<&dyn ExactSampler> {
        match self {
            BuiltTarget::Toy(t) => t.exact_sampler(),
            BuiltTarget::Gaussian(g) => g.exact_sampler(),
            BuiltTarget::Logistic { .. } => None,
        }
    }
}

pub fn gmm_from_spec(spec: &TargetSpec) -> Result<GaussianMixture> {
    let TargetSpec::Gmm {
        means,
        std,
        variances,
        weights,
    } = spec
    else {
        return Err(HarnessError::Validation("not a mixture target".into()));
    };
    let k = means.len();
    if k == 0 {
        return Err(HarnessError::Validation("target.means needs at least one component".into()));
    }
    let means = Matrix::from_rows(means)?;
    let variances = match (std, variances) {
        (Some(s), None) => Matrix::from_vec(k, means.cols(), vec![s * s; k * means.cols()])?,
        (None, Some(v)) => Matrix::from_rows(v)?,
        _ => {
            return Err(HarnessError::Validation(
                "mixture target needs exactly one of `std` or `variances`".into(),
            ))
        }
    };
    let weights = weights.clone().unwrap_or_else(|| vec![1.0 / k as f64; k]);
    Ok(GaussianMixture::new(GaussianMixtureSpec {
        means,
        variances,
        weights,
    })?)
}

pub fn build_target(spec: &TargetSpec) -> Result<BuiltTarget> {
    match spec {
        TargetSpec::Toy { potential } => Ok(BuiltTarget::Toy(ToyTarget::new(potential.parse::<ToyPotential>()?))),
        TargetSpec::Gaussian { dim } => Ok(BuiltTarget::Gaussian(GaussianMixture::standard(*dim)?)),
        TargetSpec::Gmm { .. } => Ok(BuiltTarget::Gaussian(gmm_from_spec(spec)?)),
        TargetSpec::Logistic(l) => build_logistic(l),
    }
}

/// Loads or generates the data, shuffles (or subsamples) with `data_seed`,
/// splits, and standardizes both splits with training statistics.
fn build_logistic(l: &LogisticSpec) -> Result<BuiltTarget> {
    let mut rng = RngStream::with_stream(l.data_seed, 0);
    let data = match (&l.dataset, &l.synthetic) {
        (Some(path), None) => {
            let format = l.format.unwrap_or_else(|| dataset::format_for(path));
            dataset::load_dataset(path, format, l.prior_variance)?
        }
        (None, Some(s)) => {
            let mut d = synth_logreg(s.rows, s.features, s.separation, &mut rng)?;
            d.prior_variance = l.prior_variance;
            d
        }
        _ => {
            return Err(HarnessError::Validation(
                "logistic target needs exactly one of `dataset` or `synthetic`".into(),
            ))
        }
    };
    let mut order_rng = RngStream::with_stream(l.data_seed, 1);
    let n = data.len();
    let keep = l.subsample.map_or(n, |k| k.min(n));
    let order = order_rng.sample_without_replacement(n, keep);
    let data = data.subset(&order)?;
    let train_rows = ((l.train_fraction * keep as f64).round() as usize).clamp(1, keep);
    let (mut train, mut test) = if train_rows == keep {
        (data.clone(), data)
    } else {
        data.split(train_rows)?
    };
    if l.standardize {
        train.standardize();
        let stats = train.standardization.clone().expect("just standardized");
        test.apply(&stats);
        test.standardization = Some(stats);
    }
    let model = if l.bias {
        LogisticRegression::new(train)
    } else {
        LogisticRegression::without_bias(train)
    };
    Ok(BuiltTarget::Logistic { model, test })
}
