//! Seeded experiment execution.

use std::collections::BTreeMap;

use partopt_core::diagnostics::{
    ensemble_predict_logreg, mode_coverage, mode_shares, moment_errors, GroundTruthGrid, MmdReference,
};
use partopt_core::init::init_particles;
use partopt_core::kernels::RbfKernel;
use partopt_core::{Error as CoreError, ParticleEnsemble, RngStream, Sampler};
use rayon::prelude::*;

use crate::build::{build_target, BuiltTarget};
use crate::error::{HarnessError, Result};
use crate::output::MetricRow;
use crate::spec::{ExperimentSpec, MetricKind};

/// A mode holding at least this fraction of particles counts as covered.
pub const COVERAGE_THRESHOLD: f64 = 0.05;

/// RNG stream ids derived from a repeat seed.
const INIT_STREAM: u64 = 0;
const SAMPLER_STREAM: u64 = 1;
const REFERENCE_STREAM: u64 = 2;

#[derive(Clone, Debug, PartialEq)]
pub enum RepeatStatus {
    Completed,
    Diverged { iteration: usize, message: String },
}

/// Everything one repeat produced.
#[derive(Clone, Debug, PartialEq)]
pub struct RunRecord {
    pub seed: u64,
    pub metrics: Vec<MetricRow>,
    pub snapshots: Vec<(usize, ParticleEnsemble)>,
    pub status: RepeatStatus,
}

impl RunRecord {
    pub fn final_ensemble(&self) -> Option<&ParticleEnsemble> {
        self.snapshots.last().map(|(_, e)| e)
    }

    /// Value of `metric` at the last iteration it was recorded.
    pub fn final_metric(&self, metric: &str) -> Option<f64> {
        self.metrics.iter().rev().find(|r| r.metric == metric).map(|r| r.value)
    }
}

/// Mean and sample standard deviation across the repeats that reached `iteration`.
#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub iteration: usize,
    pub metric: String,
    pub mean: f64,
    pub std: f64,
    pub count: usize,
}

#[derive(Clone, Debug)]
pub struct ExperimentResult {
    pub runs: Vec<RunRecord>,
    pub summary: Vec<SummaryRow>,
}

impl ExperimentResult {
    pub fn diverged(&self) -> usize {
        self.runs
            .iter()
            .filter(|r| matches!(r.status, RepeatStatus::Diverged { .. }))
            .count()
    }

    pub fn metric_rows(&self) -> Vec<MetricRow> {
        self.runs.iter().flat_map(|r| r.metrics.iter().cloned()).collect()
    }
}

/// Shared, read-only state for all repeats of one experiment.
pub struct RunContext {
    pub target: BuiltTarget,
    pub grid: Option<GroundTruthGrid>,
    pub reference: Option<MmdReference>,
    pub modes: Vec<Vec<f64>>,
}

impl RunContext {
    pub fn new(spec: &ExperimentSpec) -> Result<Self> {
        let target = build_target(&spec.target)?;
        let metrics = &spec.metrics;
        let wants = |f: fn(MetricKind) -> bool| metrics.names.iter().any(|m| f(*m));
        let grid = if wants(MetricKind::needs_grid) || spec.output.plots {
            target.grid(metrics.grid_resolution)?
        } else {
            None
        };
        let reference = match (&grid, metrics.names.contains(&MetricKind::Mmd)) {
            (Some(g), true) => {
                let mut rng = RngStream::with_stream(metrics.reference_seed, REFERENCE_STREAM);
                let samples = g.sample_n(metrics.reference_samples, &mut rng);
                Some(MmdReference::new(samples, RbfKernel::new(metrics.mmd_bandwidth)?)?)
            }
            _ => None,
        };
        let modes = target.modes();
        if metrics.names.contains(&MetricKind::ModeCoverage) {
            // rejects overlapping balls before any sampling happens
            let probe = ParticleEnsemble::from_rows(&modes)?;
            mode_coverage(&probe, &modes, metrics.coverage_radius)?;
        }
        Ok(Self {
            target,
            grid,
            reference,
            modes,
        })
    }

    fn measure(&self, spec: &ExperimentSpec, seed: u64, iteration: usize, e: &ParticleEnsemble) -> Result<Vec<MetricRow>> {
        let mut out = Vec::new();
        let mut push = |metric: String, value: f64| {
            out.push(MetricRow {
                iteration,
                metric,
                seed,
                value,
            })
        };
        for kind in &spec.metrics.names {
            match kind {
                MetricKind::Mmd => {
                    let r = self.reference.as_ref().expect("reference built for mmd");
                    push("mmd".into(), r.mmd_squared(e)?);
                }
                MetricKind::MeanError | MetricKind::CovError => {
                    let grid = self.grid.as_ref().expect("grid built for moments");
                    let (mean_err, cov_err) = moment_errors(e, grid)?;
                    if *kind == MetricKind::MeanError {
                        push("mean-error".into(), mean_err);
                    } else {
                        push("cov-error".into(), cov_err);
                    }
                }
                MetricKind::ModeCoverage => {
                    let cov = mode_coverage(e, &self.modes, spec.metrics.coverage_radius)?;
                    let covered = cov.iter().filter(|c| **c >= COVERAGE_THRESHOLD).count();
                    for (k, c) in cov.into_iter().enumerate() {
                        push(format!("mode-coverage-{k}"), c);
                    }
                    push("modes-covered".into(), covered as f64);
                }
                MetricKind::ModeShares => {
                    for (k, s) in mode_shares(e, &self.modes)?.into_iter().enumerate() {
                        push(format!("mode-share-{k}"), s);
                    }
                }
                MetricKind::Accuracy | MetricKind::LogLikelihood => {
                    let BuiltTarget::Logistic { model, test } = &self.target else {
                        unreachable!("validated: predictive metrics need a logistic target")
                    };
                    let (acc, ll) = ensemble_predict_logreg(e, model, test)?;
                    if *kind == MetricKind::Accuracy {
                        push("accuracy".into(), acc);
                    } else {
                        push("log-likelihood".into(), ll);
                    }
                }
            }
        }
        if let Some(bad) = out.iter().find(|r| !r.value.is_finite()) {
            return Err(HarnessError::Core(CoreError::InvalidParameter {
                name: "metric",
                reason: format!("{} is not finite", bad.metric),
            }));
        }
        Ok(out)
    }
}

fn is_divergence(e: &CoreError) -> bool {
    matches!(
        e,
        CoreError::NonFiniteGradient { .. } | CoreError::NonFiniteCoordinate { .. }
    )
}

/// Runs one repeat with seed `seed`.
pub fn run_repeat(spec: &ExperimentSpec, ctx: &RunContext, seed: u64) -> Result<RunRecord> {
    let (kind, cfg) = spec.sampler.resolve(seed)?;
    let dim = partopt_core::Target::dim(&ctx.target);
    let scheme = spec.init.scheme(dim)?;
    let initial = init_particles(spec.particles, &scheme, &mut RngStream::with_stream(seed, INIT_STREAM))?;
    let mut sampler = Sampler::new(
        &ctx.target,
        kind,
        cfg,
        initial,
        RngStream::with_stream(seed, SAMPLER_STREAM),
    )?;
    let t = spec.sampler.iterations;
    let cadence = spec.metrics.cadence;
    let snaps = spec.snapshot_iterations();
    let mut record = RunRecord {
        seed,
        metrics: ctx.measure(spec, seed, 0, sampler.ensemble())?,
        snapshots: Vec::new(),
        status: RepeatStatus::Completed,
    };
    if snaps.contains(&0) {
        record.snapshots.push((0, sampler.ensemble().clone()));
    }
    for it in 1..=t {
        match sampler.step() {
            Ok(_) => {}
            Err(e) if is_divergence(&e) => {
                record.status = RepeatStatus::Diverged {
                    iteration: it,
                    message: e.to_string(),
                };
                return Ok(record);
            }
            Err(e) => return Err(e.into()),
        }
        let e = sampler.ensemble();
        if it % cadence == 0 || it == t {
            record.metrics.extend(ctx.measure(spec, seed, it, e)?);
        }
        if snaps.contains(&it) {
            record.snapshots.push((it, e.clone()));
        }
    }
    Ok(record)
}

/// Runs every repeat (concurrently, results in seed order) and summarizes them.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    spec.validate()?;
    let ctx = RunContext::new(spec)?;
    run_with_context(spec, &ctx)
}

pub fn run_with_context(spec: &ExperimentSpec, ctx: &RunContext) -> Result<ExperimentResult> {
    let seeds: Vec<u64> = spec.seeds().collect();
    let runs = seeds
        .par_iter()
        .map(|s| run_repeat(spec, ctx, *s))
        .collect::<Result<Vec<_>>>()?;
    let summary = summarize(&runs);
    Ok(ExperimentResult { runs, summary })
}

/// Groups by (iteration, metric) in first-seen order of the metric names.
pub fn summarize(runs: &[RunRecord]) -> Vec<SummaryRow> {
    let mut order: Vec<String> = Vec::new();
    let mut groups: BTreeMap<(usize, usize), Vec<f64>> = BTreeMap::new();
    for run in runs {
        for r in &run.metrics {
            let k = match order.iter().position(|m| *m == r.metric) {
                Some(k) => k,
                None => {
                    order.push(r.metric.clone());
                    order.len() - 1
                }
            };
            groups.entry((r.iteration, k)).or_default().push(r.value);
        }
    }
    groups
        .into_iter()
        .map(|((iteration, k), values)| {
            let n = values.len() as f64;
            let mean = values.iter().sum::<f64>() / n;
            let std = if values.len() > 1 {
                (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
            } else {
                0.0
            };
            SummaryRow {
                iteration,
                metric: order[k].clone(),
                mean,
                std,
                count: values.len(),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(it: usize, m: &str, seed: u64, v: f64) -> MetricRow {
        MetricRow {
            iteration: it,
            metric: m.into(),
            seed,
            value: v,
        }
    }

    #[test]
    fn summary_mean_and_sample_std() {
        let runs: Vec<RunRecord> = [(0, 1.0), (1, 3.0)]
            .into_iter()
            .map(|(seed, v)| RunRecord {
                seed,
                metrics: vec![row(0, "b", seed, v), row(0, "a", seed, 2.0 * v), row(5, "b", seed, v)],
                snapshots: Vec::new(),
                status: RepeatStatus::Completed,
            })
            .collect();
        let s = summarize(&runs);
        assert_eq!(s.len(), 3);
        assert_eq!((s[0].metric.as_str(), s[0].mean), ("b", 2.0));
        assert!((s[0].std - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!((s[1].metric.as_str(), s[1].mean, s[1].count), ("a", 4.0, 2));
        assert_eq!(s[2].iteration, 5);
    }
}
