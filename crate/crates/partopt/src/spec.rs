//! Experiment specifications: TOML grammar, defaults, validation.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use partopt_core::config::{BandwidthPolicy, Minibatch, SamplerConfig, StepSchedule, TransportMode};
use partopt_core::init::InitScheme;
use partopt_core::samplers::{Approximation, Diffusion, Drift, Interaction, SamplerKind, UnifiedSpec};
use partopt_core::targets::ToyPotential;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

fn defaults() -> SamplerConfig {
    SamplerConfig::default()
}

fn d_true() -> bool {
    true
}
fn d_one() -> f64 {
    1.0
}
fn d_stepsize() -> f64 {
    defaults().stepsize
}
fn d_iterations() -> usize {
    defaults().iterations
}
fn d_inner_steps() -> usize {
    defaults().inner_steps
}
fn d_noise_floor() -> f64 {
    defaults().noise_floor
}
fn d_sinkhorn_max_iter() -> usize {
    defaults().sinkhorn_max_iter
}
fn d_sinkhorn_tol() -> f64 {
    defaults().sinkhorn_tol
}
fn d_train_fraction() -> f64 {
    0.8
}
fn d_cadence() -> usize {
    100
}
fn d_reference_samples() -> usize {
    10_000
}
fn d_grid_resolution() -> usize {
    400
}
fn d_out() -> PathBuf {
    PathBuf::from("out")
}
fn d_repeats() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub particles: usize,
    pub target: TargetSpec,
    pub sampler: SamplerSpec,
    #[serde(default)]
    pub init: InitSpec,
    #[serde(default)]
    pub metrics: MetricsSpec,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(default)]
    pub run: RunSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TargetSpec {
    /// One of the named 2-D toy potentials.
    Toy { potential: String },
    /// Standard Gaussian in `dim` dimensions.
    Gaussian { dim: usize },
    /// Diagonal Gaussian mixture; give either a shared `std` or per-component `variances`.
    Gmm {
        means: Vec<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        std: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        variances: Option<Vec<Vec<f64>>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        weights: Option<Vec<f64>>,
    },
    Logistic(LogisticSpec),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataFormat {
    Csv,
    Libsvm,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub rows: usize,
    pub features: usize,
    pub separation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogisticSpec {
    /// Data file; relative paths are resolved against the spec file's directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset: Option<PathBuf>,
    /// Inferred from the extension when absent (`.csv` is CSV, anything else libsvm).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<DataFormat>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synthetic: Option<SyntheticSpec>,
    #[serde(default = "d_one")]
    pub prior_variance: f64,
    #[serde(default = "d_true")]
    pub standardize: bool,
    /// Leading fraction of the (shuffled) rows used for training; the rest is the test set.
    #[serde(default = "d_train_fraction")]
    pub train_fraction: f64,
    /// Keep a random subset of this many rows before splitting.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subsample: Option<usize>,
    #[serde(default = "d_true")]
    pub bias: bool,
    /// Seed for synthetic generation, shuffling and subsampling.
    #[serde(default)]
    pub data_seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SamplerChoice {
    #[serde(rename = "sgld")]
    Sgld,
    #[serde(rename = "svgd")]
    Svgd,
    #[serde(rename = "w-sgld")]
    WSgld,
    #[serde(rename = "w-sgld-b")]
    WSgldBlob,
    #[serde(rename = "pi-sgld")]
    PiSgld,
    #[serde(rename = "unified")]
    Unified,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FullKeyword {
    Full,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged, expecting = "a positive batch size or \"full\"")]
pub enum MinibatchSetting {
    Size(usize),
    Full(FullKeyword),
}

impl Default for MinibatchSetting {
    fn default() -> Self {
        MinibatchSetting::Full(FullKeyword::Full)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MedianKeyword {
    Median,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged, expecting = "a positive bandwidth or \"median\"")]
pub enum BandwidthSetting {
    Fixed(f64),
    Median(MedianKeyword),
}

impl Default for BandwidthSetting {
    fn default() -> Self {
        BandwidthSetting::Median(MedianKeyword::Median)
    }
}

impl BandwidthSetting {
    fn policy(self) -> BandwidthPolicy {
        match self {
            BandwidthSetting::Fixed(h) => BandwidthPolicy::Fixed(h),
            BandwidthSetting::Median(_) => BandwidthPolicy::Median,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TransportSetting {
    #[default]
    FixedScale,
    Sinkhorn,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DriftSetting {
    Zero,
    HalfGradient,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiffusionSetting {
    Zero,
    Identity,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InteractionSetting {
    None,
    Svgd,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ApproximationSetting {
    #[default]
    GradientFlow,
    Blob,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnifiedSetting {
    pub drift: DriftSetting,
    pub diffusion: DiffusionSetting,
    pub interaction: InteractionSetting,
    #[serde(default = "d_one")]
    pub lambda1: f64,
    #[serde(default = "d_one")]
    pub lambda2: f64,
    #[serde(default)]
    pub approximation: ApproximationSetting,
    #[serde(default)]
    pub asserted: bool,
}

impl UnifiedSetting {
    pub fn to_core(&self) -> UnifiedSpec {
        UnifiedSpec {
            drift: match self.drift {
                DriftSetting::Zero => Drift::Zero,
                DriftSetting::HalfGradient => Drift::HalfGradient,
            },
            diffusion: match self.diffusion {
                DiffusionSetting::Zero => Diffusion::Zero,
                DiffusionSetting::Identity => Diffusion::Identity,
            },
            interaction: match self.interaction {
                InteractionSetting::None => Interaction::None,
                InteractionSetting::Svgd => Interaction::Svgd,
            },
            lambda1: self.lambda1,
            lambda2: self.lambda2,
            approximation: match self.approximation {
                ApproximationSetting::GradientFlow => Approximation::DiscreteGradientFlow,
                ApproximationSetting::Blob => Approximation::Blob,
            },
            asserted: self.asserted,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerSpec {
    pub kind: SamplerChoice,
    #[serde(default = "d_stepsize")]
    pub stepsize: f64,
    #[serde(default = "d_iterations")]
    pub iterations: usize,
    #[serde(default)]
    pub minibatch: MinibatchSetting,
    #[serde(default = "d_one")]
    pub svgd_weight: f64,
    #[serde(default = "d_one")]
    pub diffusion_weight: f64,
    #[serde(default = "d_true")]
    pub langevin_drift: bool,
    #[serde(default = "d_one")]
    pub entropic_reg: f64,
    #[serde(default = "d_one")]
    pub plan_scale: f64,
    #[serde(default)]
    pub transport: TransportSetting,
    #[serde(default = "d_inner_steps")]
    pub inner_steps: usize,
    #[serde(default)]
    pub bandwidth: BandwidthSetting,
    #[serde(default)]
    pub blob_bandwidth: BandwidthSetting,
    #[serde(default = "d_noise_floor")]
    pub noise_floor: f64,
    /// Polynomial stepsize decay exponent; 0 keeps the stepsize constant.
    #[serde(default)]
    pub step_decay: f64,
    #[serde(default = "d_sinkhorn_max_iter")]
    pub sinkhorn_max_iter: usize,
    #[serde(default = "d_sinkhorn_tol")]
    pub sinkhorn_tol: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unified: Option<UnifiedSetting>,
}

impl SamplerSpec {
    pub fn config(&self, seed: u64) -> SamplerConfig {
        SamplerConfig {
            stepsize: self.stepsize,
            iterations: self.iterations,
            seed,
            minibatch: match self.minibatch {
                MinibatchSetting::Size(n) => Minibatch::Size(n),
                MinibatchSetting::Full(_) => Minibatch::Full,
            },
            svgd_weight: self.svgd_weight,
            diffusion_weight: self.diffusion_weight,
            langevin_drift: self.langevin_drift,
            entropic_reg: self.entropic_reg,
            plan_scale: self.plan_scale,
            transport_mode: match self.transport {
                TransportSetting::FixedScale => TransportMode::FixedScale,
                TransportSetting::Sinkhorn => TransportMode::Sinkhorn,
            },
            inner_steps: self.inner_steps,
            bandwidth: self.bandwidth.policy(),
            blob_bandwidth: self.blob_bandwidth.policy(),
            noise_floor: self.noise_floor,
            schedule: if self.step_decay == 0.0 {
                StepSchedule::Constant
            } else {
                StepSchedule::PolynomialDecay {
                    exponent: self.step_decay,
                }
            },
            sinkhorn_max_iter: self.sinkhorn_max_iter,
            sinkhorn_tol: self.sinkhorn_tol,
        }
    }

    /// Concrete sampler and the configuration it runs with.
    pub fn resolve(&self, seed: u64) -> Result<(SamplerKind, SamplerConfig)> {
        let cfg = self.config(seed);
        let kind = match self.kind {
            SamplerChoice::Sgld => SamplerKind::Sgld,
            SamplerChoice::Svgd => SamplerKind::Svgd,
            SamplerChoice::WSgld => SamplerKind::WSgld,
            SamplerChoice::WSgldBlob => SamplerKind::WSgldBlob,
            SamplerChoice::PiSgld => SamplerKind::PiSgld,
            SamplerChoice::Unified => {
                let u = self.unified.as_ref().ok_or_else(|| {
                    HarnessError::Validation("sampler.kind = \"unified\" needs a [sampler.unified] table".into())
                })?;
                return Ok(u.to_core().resolve(&cfg)?);
            }
        };
        Ok((kind, cfg))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitSpec {
    /// `N(mean, scale² I)`; an empty mean is the origin, a single value is broadcast.
    Gaussian {
        #[serde(default)]
        mean: Vec<f64>,
        #[serde(default = "d_one")]
        scale: f64,
    },
    Uniform { lo: Vec<f64>, hi: Vec<f64> },
}

impl Default for InitSpec {
    fn default() -> Self {
        InitSpec::Gaussian {
            mean: Vec::new(),
            scale: 1.0,
        }
    }
}

impl InitSpec {
    pub fn scheme(&self, dim: usize) -> Result<InitScheme> {
        match self {
            InitSpec::Gaussian { mean, scale } => {
                let mean = match mean.len() {
                    0 => vec![0.0; dim],
                    1 => vec![mean[0]; dim],
                    n if n == dim => mean.clone(),
                    n => {
                        return Err(HarnessError::Validation(format!(
                            "init.mean has {n} entries but the target has dimension {dim}"
                        )))
                    }
                };
                Ok(InitScheme::Gaussian { mean, scale: *scale })
            }
            InitSpec::Uniform { lo, hi } => {
                if lo.len() != dim || hi.len() != dim {
                    return Err(HarnessError::Validation(format!(
                        "init.lo and init.hi need {dim} entries, got {} and {}",
                        lo.len(),
                        hi.len()
                    )));
                }
                Ok(InitScheme::Uniform {
                    lo: lo.clone(),
                    hi: hi.clone(),
                })
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MetricKind {
    /// Squared MMD against reference samples drawn from the quadrature grid.
    Mmd,
    MeanError,
    CovError,
    /// Fraction within `coverage_radius` of each mode, plus the count of modes holding ≥ 5%.
    ModeCoverage,
    /// Fraction whose nearest mode is each mode.
    ModeShares,
    Accuracy,
    LogLikelihood,
}

impl MetricKind {
    pub fn needs_grid(self) -> bool {
        matches!(self, MetricKind::Mmd | MetricKind::MeanError | MetricKind::CovError)
    }

    pub fn needs_modes(self) -> bool {
        matches!(self, MetricKind::ModeCoverage | MetricKind::ModeShares)
    }

    pub fn needs_test_data(self) -> bool {
        matches!(self, MetricKind::Accuracy | MetricKind::LogLikelihood)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsSpec {
    #[serde(default)]
    pub names: Vec<MetricKind>,
    /// Metrics are recorded at iteration 0, every `cadence` iterations, and at the last one.
    #[serde(default = "d_cadence")]
    pub cadence: usize,
    #[serde(default = "d_one")]
    pub mmd_bandwidth: f64,
    #[serde(default = "d_reference_samples")]
    pub reference_samples: usize,
    #[serde(default)]
    pub reference_seed: u64,
    #[serde(default = "d_one")]
    pub coverage_radius: f64,
    #[serde(default = "d_grid_resolution")]
    pub grid_resolution: usize,
}

impl Default for MetricsSpec {
    fn default() -> Self {
        Self {
            names: Vec::new(),
            cadence: d_cadence(),
            mmd_bandwidth: 1.0,
            reference_samples: d_reference_samples(),
            reference_seed: 0,
            coverage_radius: 1.0,
            grid_resolution: d_grid_resolution(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default = "d_out")]
    pub dir: PathBuf,
    /// Iterations at which particles are dumped; defaults to 0, T/4, T/2, 3T/4, T.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshots: Option<Vec<usize>>,
    #[serde(default = "d_true")]
    pub plots: bool,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self {
            dir: d_out(),
            snapshots: None,
            plots: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    #[serde(default = "d_repeats")]
    pub repeats: usize,
    /// Repeat `s` runs with seed `base_seed + s`.
    #[serde(default)]
    pub base_seed: u64,
}

impl Default for RunSpec {
    fn default() -> Self {
        Self {
            repeats: 1,
            base_seed: 0,
        }
    }
}

impl ExperimentSpec {
    pub fn seeds(&self) -> impl Iterator<Item = u64> + '_ {
        (0..self.run.repeats as u64).map(|s| self.run.base_seed.wrapping_add(s))
    }

    pub fn snapshot_iterations(&self) -> BTreeSet<usize> {
        let t = self.sampler.iterations;
        match &self.output.snapshots {
            Some(v) => v.iter().copied().collect(),
            None => [0, t / 4, t / 2, 3 * t / 4, t].into_iter().collect(),
        }
    }

    /// Dimension of the target when it is known without loading data.
    pub fn target_dim(&self) -> Option<usize> {
        match &self.target {
            TargetSpec::Toy { .. } => Some(2),
            TargetSpec::Gaussian { dim } => Some(*dim),
            TargetSpec::Gmm { means, .. } => means.first().map(Vec::len),
            TargetSpec::Logistic(l) => l
                .synthetic
                .as_ref()
                .map(|s| s.features + usize::from(l.bias)),
        }
    }

    /// Semantic checks beyond what the grammar enforces.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(HarnessError::Validation(m));
        if self.particles == 0 {
            return bad("particles must be at least 1".into());
        }
        if self.metrics.cadence == 0 {
            return bad("metrics.cadence must be at least 1".into());
        }
        if self.run.repeats == 0 {
            return bad("run.repeats must be at least 1".into());
        }
        if !(self.metrics.mmd_bandwidth > 0.0 && self.metrics.mmd_bandwidth.is_finite()) {
            return bad("metrics.mmd_bandwidth must be positive".into());
        }
        if self.metrics.reference_samples == 0 {
            return bad("metrics.reference_samples must be at least 1".into());
        }
        if self.metrics.grid_resolution < 2 {
            return bad("metrics.grid_resolution must be at least 2".into());
        }
        match (self.sampler.kind, &self.sampler.unified) {
            (SamplerChoice::Unified, None) => {
                return bad("sampler.kind = \"unified\" needs a [sampler.unified] table".into())
            }
            (k, Some(_)) if k != SamplerChoice::Unified => {
                return bad("[sampler.unified] is only read when sampler.kind = \"unified\"".into())
            }
            _ => {}
        }
        if let MinibatchSetting::Size(0) = self.sampler.minibatch {
            return bad("sampler.minibatch must be at least 1".into());
        }
        let (kind, cfg) = self.sampler.resolve(self.run.base_seed)?;
        cfg.validate()?;
        let median_kernel = match kind {
            SamplerKind::Svgd => cfg.bandwidth == BandwidthPolicy::Median,
            SamplerKind::PiSgld => cfg.svgd_weight > 0.0 && cfg.bandwidth == BandwidthPolicy::Median,
            SamplerKind::WSgldBlob => cfg.blob_bandwidth == BandwidthPolicy::Median,
            _ => false,
        };
        if median_kernel && self.particles < 2 {
            return bad(format!(
                "{kind} with the median bandwidth needs at least 2 particles; set a fixed bandwidth"
            ));
        }
        if let Some(snaps) = &self.output.snapshots {
            if let Some(s) = snaps.iter().find(|s| **s > self.sampler.iterations) {
                return bad(format!(
                    "snapshot iteration {s} is beyond sampler.iterations = {}",
                    self.sampler.iterations
                ));
            }
        }
        self.validate_target()?;
        if let Some(dim) = self.target_dim() {
            self.init.scheme(dim)?;
        }
        self.validate_metrics()
    }

    fn validate_target(&self) -> Result<()> {
        let bad = |m: String| Err(HarnessError::Validation(m));
        match &self.target {
            TargetSpec::Toy { potential } => {
                potential.parse::<ToyPotential>().map_err(|_| {
                    let names: Vec<&str> = ToyPotential::ALL.iter().map(|p| p.name()).collect();
                    HarnessError::Validation(format!(
                        "unknown toy potential `{potential}`; expected one of {}",
                        names.join(", ")
                    ))
                })?;
            }
            TargetSpec::Gaussian { dim } => {
                if *dim == 0 {
                    return bad("target.dim must be at least 1".into());
                }
            }
            TargetSpec::Gmm { .. } => {
                crate::build::gmm_from_spec(&self.target)?;
            }
            TargetSpec::Logistic(l) => {
                match (&l.dataset, &l.synthetic) {
                    (Some(p), None) => {
                        if !p.exists() {
                            return bad(format!("dataset {} does not exist", p.display()));
                        }
                    }
                    (None, Some(s)) => {
                        if s.rows < 2 || s.features == 0 {
                            return bad("target.synthetic needs rows >= 2 and features >= 1".into());
                        }
                    }
                    _ => return bad("logistic target needs exactly one of `dataset` or `synthetic`".into()),
                }
                if !(l.train_fraction > 0.0 && l.train_fraction <= 1.0) {
                    return bad("target.train_fraction must lie in (0, 1]".into());
                }
                if !(l.prior_variance > 0.0 && l.prior_variance.is_finite()) {
                    return bad("target.prior_variance must be positive".into());
                }
                if l.subsample == Some(0) {
                    return bad("target.subsample must be at least 1".into());
                }
            }
        }
        Ok(())
    }

    fn validate_metrics(&self) -> Result<()> {
        let is_logistic = matches!(self.target, TargetSpec::Logistic(_));
        let two_d = self.target_dim() == Some(2) && !is_logistic;
        for m in &self.metrics.names {
            let ok = if m.needs_grid() {
                two_d
            } else if m.needs_modes() {
                match &self.target {
                    TargetSpec::Toy { potential } => potential != "ring",
                    TargetSpec::Gmm { .. } => true,
                    _ => false,
                }
            } else {
                is_logistic
            };
            if !ok {
                let name = toml::to_string(&Wrapper { m: *m }).unwrap_or_default();
                return Err(HarnessError::Validation(format!(
                    "metric {} does not apply to this target",
                    name.trim().trim_start_matches("m = ")
                )));
            }
        }
        Ok(())
    }
}

#[derive(Serialize)]
struct Wrapper {
    m: MetricKind,
}

/// Parses a spec from TOML text. `origin` names the source in error messages and
/// anchors relative dataset paths.
pub fn parse_spec(text: &str, origin: &Path) -> Result<ExperimentSpec> {
    let mut spec: ExperimentSpec = toml::from_str(text).map_err(|e| parse_error(text, origin, &e))?;
    if let TargetSpec::Logistic(l) = &mut spec.target {
        if let Some(p) = &l.dataset {
            if p.is_relative() {
                if let Some(dir) = origin.parent() {
                    l.dataset = Some(dir.join(p));
                }
            }
        }
    }
    Ok(spec)
}

/// Reads, parses and validates a spec file.
pub fn load_spec(path: &Path) -> Result<ExperimentSpec> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    let spec = parse_spec(&text, path)?;
    spec.validate()?;
    Ok(spec)
}

/// Normalized TOML form with every default written out.
pub fn to_toml(spec: &ExperimentSpec) -> String {
    toml::to_string(spec).expect("experiment specs always serialize")
}

pub fn save_spec(spec: &ExperimentSpec, path: &Path) -> Result<()> {
    std::fs::write(path, to_toml(spec)).map_err(|e| HarnessError::io(path, e))
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rfind('\n').map_or(before.len(), |p| before.len() - p - 1) + 1;
    (line, column)
}

/// First `key =` occurrence of `key` at the start of a line.
fn find_key(text: &str, key: &str) -> Option<usize> {
    let mut offset = 0;
    for line in text.split_inclusive('\n') {
        let trimmed = line.trim_start();
        if let Some(rest) = trimmed.strip_prefix(key) {
            if rest.trim_start().starts_with('=') {
                return Some(offset + line.len() - trimmed.len());
            }
        }
        offset += line.len();
    }
    None
}

fn parse_error(text: &str, origin: &Path, err: &toml::de::Error) -> HarnessError {
    let mut message = err.message().to_string();
    let mut span = err.span().map(|s| s.start);
    // serde reports unknown keys as: unknown field `x`, expected one of `a`, `b`
    if let Some(rest) = err.message().strip_prefix("unknown field `") {
        let names: Vec<&str> = rest.split('`').step_by(2).collect();
        if let Some((unknown, expected)) = names.split_first() {
            let nearest = expected
                .iter()
                .map(|k| (strsim::levenshtein(unknown, k), *k))
                .min();
            message = match nearest {
                Some((_, k)) => format!("unknown key `{unknown}`; did you mean `{k}`?"),
                None => format!("unknown key `{unknown}`"),
            };
            // tagged tables report the whole table's span; narrow it to the key
            let from = span.unwrap_or(0);
            if let Some(at) = find_key(&text[from..], unknown) {
                span = Some(from + at);
            }
        }
    }
    let (line, column) = span.map_or((0, 0), |s| line_col(text, s));
    HarnessError::Parse {
        path: origin.to_path_buf(),
        line,
        column,
        message,
    }
}
