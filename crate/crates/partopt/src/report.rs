//! Writes an experiment's results to its output directory.

use std::path::{Path, PathBuf};

use crate::error::{HarnessError, Result};
use crate::output::{export_csv, export_snapshots, fmt_f64};
use crate::plot::{render_curves, render_scatter};
use crate::run::{ExperimentResult, RepeatStatus, RunContext};
use crate::spec::{save_spec, ExperimentSpec};

/// Files written into `dir`:
///
/// - `spec.toml`: the normalized spec
/// - `metrics.csv` and `metrics_seed{s}.csv`
/// - `particles_seed{s}.csv`: every snapshot of that repeat
/// - `summary.csv`: mean and sample std per iteration and metric
/// - `repeats.csv`: completion status per seed
/// - `curves.svg`, `scatter_seed{s}.svg` when plots are enabled
pub fn write_outputs(spec: &ExperimentSpec, ctx: &RunContext, result: &ExperimentResult, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    let mut written = Vec::new();
    let mut put = |name: String| {
        let p = dir.join(name);
        written.push(p.clone());
        p
    };
    save_spec(spec, &put("spec.toml".into()))?;
    let all = result.metric_rows();
    export_csv(&all, &put("metrics.csv".into()))?;
    for run in &result.runs {
        export_csv(&run.metrics, &put(format!("metrics_seed{}.csv", run.seed)))?;
        if !run.snapshots.is_empty() {
            export_snapshots(&run.snapshots, &put(format!("particles_seed{}.csv", run.seed)))?;
        }
    }
    let mut summary = String::from("iteration,metric,mean,std,count\n");
    for s in &result.summary {
        summary.push_str(&format!(
            "{},{},{},{},{}\n",
            s.iteration,
            s.metric,
            fmt_f64(s.mean),
            fmt_f64(s.std),
            s.count
        ));
    }
    let p = put("summary.csv".into());
    std::fs::write(&p, summary).map_err(|e| HarnessError::io(&p, e))?;
    let mut repeats = String::from("seed,status,iteration,detail\n");
    for run in &result.runs {
        match &run.status {
            RepeatStatus::Completed => {
                repeats.push_str(&format!("{},completed,{},\n", run.seed, spec.sampler.iterations))
            }
            RepeatStatus::Diverged { iteration, message } => repeats.push_str(&format!(
                "{},diverged,{},\"{}\"\n",
                run.seed,
                iteration,
                message.replace('"', "'")
            )),
        }
    }
    let p = put("repeats.csv".into());
    std::fs::write(&p, repeats).map_err(|e| HarnessError::io(&p, e))?;
    if spec.output.plots {
        if !all.is_empty() {
            render_curves(&all, &put("curves.svg".into()))?;
        }
        for run in &result.runs {
            if let Some(e) = run.final_ensemble().filter(|e| e.dim() == 2) {
                render_scatter(e, ctx.grid.as_ref(), &put(format!("scatter_seed{}.svg", run.seed)))?;
            }
        }
    }
    Ok(written)
}
