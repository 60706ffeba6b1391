//! One-parameter sweeps: rerun a spec with a single key overridden.

use std::path::Path;

use crate::error::{HarnessError, Result};
use crate::output::fmt_f64;
use crate::report::write_outputs;
use crate::run::{run_with_context, RunContext};
use crate::spec::{parse_spec, to_toml, ExperimentSpec};

/// TOML literal for a command-line value: integers, floats and booleans keep
/// their type, anything else becomes a string.
pub fn parse_value(raw: &str) -> toml::Value {
    let raw = raw.trim();
    if let Ok(i) = raw.parse::<i64>() {
        toml::Value::Integer(i)
    } else if let Ok(f) = raw.parse::<f64>() {
        toml::Value::Float(f)
    } else if let Ok(b) = raw.parse::<bool>() {
        toml::Value::Boolean(b)
    } else {
        toml::Value::String(raw.to_string())
    }
}

/// Copy of `spec` with the dotted key `param` (e.g. `sampler.plan_scale`) set to `value`.
pub fn override_param(spec: &ExperimentSpec, param: &str, value: toml::Value, origin: &Path) -> Result<ExperimentSpec> {
    let mut doc: toml::Table = toml::from_str(&to_toml(spec)).expect("normalized specs parse");
    let keys: Vec<&str> = param.split('.').collect();
    let (last, parents) = keys.split_last().expect("split yields at least one key");
    let mut table = &mut doc;
    for k in parents {
        table = table
            .entry(k.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| HarnessError::Validation(format!("`{k}` in `{param}` is not a table")))?;
    }
    table.insert(last.to_string(), value);
    let text = toml::to_string(&doc).expect("tables serialize");
    let out = parse_spec(&text, origin)?;
    out.validate()?;
    Ok(out)
}

/// Directory-safe label for a sweep value.
pub fn value_label(raw: &str) -> String {
    raw.trim()
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' { c } else { '_' })
        .collect()
}

/// Runs every value into `<output.dir>/<param>=<value>/` and writes
/// `<output.dir>/sweep.csv` with the final-iteration summary of each run.
/// Returns the number of diverged repeats.
pub fn run_sweep(spec: &ExperimentSpec, param: &str, values: &[String], origin: &Path) -> Result<usize> {
    let root = spec.output.dir.clone();
    let mut csv = String::from("param,value,metric,iteration,mean,std,count\n");
    let mut diverged = 0;
    for raw in values {
        let mut s = override_param(spec, param, parse_value(raw), origin)?;
        s.output.dir = root.join(format!("{param}={}", value_label(raw)));
        let ctx = RunContext::new(&s)?;
        let result = run_with_context(&s, &ctx)?;
        write_outputs(&s, &ctx, &result, &s.output.dir)?;
        diverged += result.diverged();
        let last = result.summary.iter().map(|r| r.iteration).max();
        for row in result.summary.iter().filter(|r| Some(r.iteration) == last) {
            csv.push_str(&format!(
                "{param},{},{},{},{},{},{}\n",
                raw.trim(),
                row.metric,
                row.iteration,
                fmt_f64(row.mean),
                fmt_f64(row.std),
                row.count
            ));
        }
    }
    std::fs::create_dir_all(&root).map_err(|e| HarnessError::io(&root, e))?;
    let p = root.join("sweep.csv");
    std::fs::write(&p, csv).map_err(|e| HarnessError::io(&p, e))?;
    Ok(diverged)
}
