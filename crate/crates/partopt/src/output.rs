//! CSV files for metric records and particle snapshots.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use partopt_core::{Matrix, ParticleEnsemble};

use crate::error::{HarnessError, Result};

pub const METRICS_HEADER: &str = "iteration,metric,seed,value";

/// One metric value from one repeat.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricRow {
    pub iteration: usize,
    pub metric: String,
    pub seed: u64,
    pub value: f64,
}

/// 17 significant digits: enough for an exact round trip.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| HarnessError::io(path, e))
}

pub fn metrics_csv(rows: &[MetricRow]) -> String {
    let mut out = String::from(METRICS_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!("{},{},{},{}\n", r.iteration, r.metric, r.seed, fmt_f64(r.value)));
    }
    out
}

pub fn export_csv(rows: &[MetricRow], path: &Path) -> Result<()> {
    let mut w = create(path)?;
    w.write_all(metrics_csv(rows).as_bytes())
        .and_then(|_| w.flush())
        .map_err(|e| HarnessError::io(path, e))
}

pub fn particles_header(dim: usize) -> String {
    let mut h = String::from("iteration,particle");
    for d in 0..dim {
        h.push_str(&format!(",dim{d}"));
    }
    h
}

pub fn particles_csv(snapshots: &[(usize, ParticleEnsemble)]) -> String {
    let dim = snapshots.first().map_or(0, |(_, e)| e.dim());
    let mut out = particles_header(dim);
    out.push('\n');
    for (iteration, e) in snapshots {
        for (i, row) in e.positions().iter_rows().enumerate() {
            out.push_str(&format!("{iteration},{i}"));
            for x in row {
                out.push(',');
                out.push_str(&fmt_f64(*x));
            }
            out.push('\n');
        }
    }
    out
}

pub fn export_particles(ensemble: &ParticleEnsemble, iteration: usize, path: &Path) -> Result<()> {
    export_snapshots(&[(iteration, ensemble.clone())], path)
}

/// Several snapshots of one run in a single file, in the order given.
pub fn export_snapshots(snapshots: &[(usize, ParticleEnsemble)], path: &Path) -> Result<()> {
    let mut w = create(path)?;
    w.write_all(particles_csv(snapshots).as_bytes())
        .and_then(|_| w.flush())
        .map_err(|e| HarnessError::io(path, e))
}

fn reader(path: &Path) -> Result<(csv::StringRecord, csv::Reader<File>)> {
    let file = File::open(path).map_err(|e| HarnessError::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let header = rdr.headers().map_err(|e| csv_err(path, &e))?.clone();
    Ok((header, rdr))
}

fn csv_err(path: &Path, e: &csv::Error) -> HarnessError {
    HarnessError::Data {
        path: path.to_path_buf(),
        line: e.position().map_or(0, |p| p.line() as usize),
        message: e.to_string(),
    }
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize, path: &Path) -> Result<T> {
    let line = rec.position().map_or(0, |p| p.line() as usize);
    rec.get(i)
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| HarnessError::Data {
            path: path.to_path_buf(),
            line,
            message: format!("bad value in column {}", i + 1),
        })
}

pub fn read_metrics(path: &Path) -> Result<Vec<MetricRow>> {
    let (header, mut rdr) = reader(path)?;
    if header.iter().collect::<Vec<_>>().join(",") != METRICS_HEADER {
        return Err(HarnessError::Data {
            path: path.to_path_buf(),
            line: 1,
            message: format!("expected header `{METRICS_HEADER}`"),
        });
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_err(path, &e))?;
        rows.push(MetricRow {
            iteration: field(&rec, 0, path)?,
            metric: rec.get(1).unwrap_or_default().to_string(),
            seed: field(&rec, 2, path)?,
            value: field(&rec, 3, path)?,
        });
    }
    Ok(rows)
}

/// Snapshots grouped by iteration, in file order.
pub fn read_particles(path: &Path) -> Result<Vec<(usize, ParticleEnsemble)>> {
    let (header, mut rdr) = reader(path)?;
    let dim = header.len().saturating_sub(2);
    if header.iter().collect::<Vec<_>>().join(",") != particles_header(dim) || dim == 0 {
        return Err(HarnessError::Data {
            path: path.to_path_buf(),
            line: 1,
            message: "expected header `iteration,particle,dim0,...`".into(),
        });
    }
    let mut groups: Vec<(usize, Vec<f64>)> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_err(path, &e))?;
        let it: usize = field(&rec, 0, path)?;
        if groups.last().map(|g| g.0) != Some(it) {
            groups.push((it, Vec::new()));
        }
        let buf = &mut groups.last_mut().expect("pushed above").1;
        for d in 0..dim {
            buf.push(field(&rec, d + 2, path)?);
        }
    }
    groups
        .into_iter()
        .map(|(it, data)| {
            let m = data.len() / dim;
            Ok((it, ParticleEnsemble::new(Matrix::from_vec(m, dim, data)?)?))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_records_give_header_only() {
        assert_eq!(metrics_csv(&[]), "iteration,metric,seed,value\n");
    }

    #[test]
    fn formatting_keeps_every_bit() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, f64::MIN_POSITIVE, 0.0] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
        }
    }

    #[test]
    fn particle_header() {
        assert_eq!(particles_header(3), "iteration,particle,dim0,dim1,dim2");
    }
}
