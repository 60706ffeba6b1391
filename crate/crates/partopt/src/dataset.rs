//! Binary classification datasets in CSV and libsvm form.

use std::path::Path;

use partopt_core::targets::LogisticRegressionData;
use partopt_core::Matrix;

use crate::error::{HarnessError, Result};
use crate::spec::DataFormat;

/// Parsed rows before label mapping.
struct RawData {
    rows: Vec<Vec<f64>>,
    labels: Vec<f64>,
    /// 1-based line number of each row, for error messages.
    lines: Vec<usize>,
}

pub fn format_for(path: &Path) -> DataFormat {
    match path.extension().and_then(|e| e.to_str()) {
        Some(e) if e.eq_ignore_ascii_case("csv") => DataFormat::Csv,
        _ => DataFormat::Libsvm,
    }
}

/// Reads a dataset and maps its two label values to `-1` (smaller) and `+1` (larger).
pub fn load_dataset(path: &Path, format: DataFormat, prior_variance: f64) -> Result<LogisticRegressionData> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    parse_dataset(&text, path, format, prior_variance)
}

pub fn parse_dataset(text: &str, path: &Path, format: DataFormat, prior_variance: f64) -> Result<LogisticRegressionData> {
    let raw = match format {
        DataFormat::Csv => parse_csv(text, path)?,
        DataFormat::Libsvm => parse_libsvm(text, path)?,
    };
    let labels = map_labels(&raw, path)?;
    let d = raw.rows.first().map_or(0, Vec::len);
    let n = raw.rows.len();
    let features = Matrix::from_vec(n, d, raw.rows.into_iter().flatten().collect())?;
    Ok(LogisticRegressionData::new(features, labels, prior_variance)?)
}

fn data_err(path: &Path, line: usize, message: impl Into<String>) -> HarnessError {
    HarnessError::Data {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn parse_csv(text: &str, path: &Path) -> Result<RawData> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut raw = RawData {
        rows: Vec::new(),
        labels: Vec::new(),
        lines: Vec::new(),
    };
    let mut width = None;
    for (k, record) in reader.records().enumerate() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(k + 1, |p| p.line() as usize);
            data_err(path, line, e.to_string())
        })?;
        let line = record.position().map_or(k + 1, |p| p.line() as usize);
        if record.iter().all(str::is_empty) {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, _> = record.iter().map(str::parse::<f64>).collect();
        let values = match parsed {
            Ok(v) => v,
            // a non-numeric first row is a header
            Err(_) if raw.rows.is_empty() && width.is_none() => {
                width = Some(record.len());
                continue;
            }
            Err(e) => return Err(data_err(path, line, format!("not a number: {e}"))),
        };
        if values.len() < 2 {
            return Err(data_err(path, line, "need at least one feature and a label"));
        }
        match width {
            Some(w) if w != values.len() => {
                return Err(data_err(path, line, format!("expected {w} columns, found {}", values.len())))
            }
            _ => width = Some(values.len()),
        }
        if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
            return Err(data_err(path, line, format!("column {} is not finite", bad + 1)));
        }
        let (label, features) = values.split_last().expect("at least two values");
        raw.labels.push(*label);
        raw.rows.push(features.to_vec());
        raw.lines.push(line);
    }
    if raw.rows.is_empty() {
        return Err(data_err(path, 1, "no data rows"));
    }
    Ok(raw)
}

fn parse_libsvm(text: &str, path: &Path) -> Result<RawData> {
    let mut sparse: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut labels = Vec::new();
    let mut lines = Vec::new();
    let mut width = 0;
    for (k, line) in text.lines().enumerate() {
        let lineno = k + 1;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut tokens = content.split_whitespace();
        let label: f64 = tokens
            .next()
            .and_then(|t| t.parse().ok())
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| data_err(path, lineno, "missing or invalid label"))?;
        let mut entries = Vec::new();
        let mut last = 0;
        for tok in tokens {
            let (idx, val) = tok
                .split_once(':')
                .ok_or_else(|| data_err(path, lineno, format!("expected index:value, found `{tok}`")))?;
            let idx: usize = idx
                .parse()
                .map_err(|_| data_err(path, lineno, format!("invalid index `{idx}`")))?;
            if idx == 0 {
                return Err(data_err(path, lineno, "indices are 1-based"));
            }
            if idx <= last {
                return Err(data_err(path, lineno, "indices must be strictly increasing"));
            }
            last = idx;
            let val: f64 = val
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| data_err(path, lineno, format!("invalid value `{val}`")))?;
            entries.push((idx, val));
        }
        width = width.max(last);
        sparse.push(entries);
        labels.push(label);
        lines.push(lineno);
    }
    if sparse.is_empty() {
        return Err(data_err(path, 1, "no data rows"));
    }
    if width == 0 {
        return Err(data_err(path, 1, "no features"));
    }
    let rows = sparse
        .into_iter()
        .map(|entries| {
            let mut row = vec![0.0; width];
            for (i, v) in entries {
                row[i - 1] = v;
            }
            row
        })
        .collect();
    Ok(RawData { rows, labels, lines })
}

fn map_labels(raw: &RawData, path: &Path) -> Result<Vec<f64>> {
    let mut distinct: Vec<f64> = Vec::new();
    for (y, line) in raw.labels.iter().zip(&raw.lines) {
        if !distinct.contains(y) {
            if distinct.len() == 2 {
                return Err(data_err(
                    path,
                    *line,
                    format!("label {y} is a third class; only binary labels are supported"),
                ));
            }
            distinct.push(*y);
        }
    }
    if distinct.len() < 2 {
        return Err(data_err(path, raw.lines[0], "all rows share one label"));
    }
    let hi = distinct[0].max(distinct[1]);
    Ok(raw.labels.iter().map(|y| if *y == hi { 1.0 } else { -1.0 }).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn csv(text: &str) -> Result<LogisticRegressionData> {
        parse_dataset(text, Path::new("d.csv"), DataFormat::Csv, 1.0)
    }

    fn svm(text: &str) -> Result<LogisticRegressionData> {
        parse_dataset(text, Path::new("d.svm"), DataFormat::Libsvm, 1.0)
    }

    #[test]
    fn csv_round_trip() {
        let d = csv("a,b,y\n1.5,-2,0\n0.25,3e2,1\n-7,0,1\n").unwrap();
        assert_eq!(d.features.as_slice(), &[1.5, -2.0, 0.25, 300.0, -7.0, 0.0]);
        assert_eq!(d.labels, vec![-1.0, 1.0, 1.0]);
        let d = csv("1,2,-1\n3,4,1\n").unwrap();
        assert_eq!(d.features.rows(), 2);
    }

    #[test]
    fn libsvm_is_one_based_and_dense() {
        let d = svm("-1 3:0.5\n+1 1:2 2:1\n").unwrap();
        assert_eq!(d.features.row(0), &[0.0, 0.0, 0.5]);
        assert_eq!(d.features.row(1), &[2.0, 1.0, 0.0]);
        assert_eq!(d.labels, vec![-1.0, 1.0]);
    }

    #[test]
    fn labels_map_smaller_to_negative() {
        let d = svm("2 1:1\n1 1:2\n2 1:3\n").unwrap();
        assert_eq!(d.labels, vec![1.0, -1.0, 1.0]);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let line_of = |r: Result<LogisticRegressionData>| match r {
            Err(HarnessError::Data { line, .. }) => line,
            other => panic!("expected data error, got {other:?}"),
        };
        assert_eq!(line_of(csv("x,y\n1,0\n2,oops\n")), 3);
        assert_eq!(line_of(csv("1,2,0\n1,1\n")), 2);
        assert_eq!(line_of(csv("1,0\n2,1\n3,2\n")), 3);
        assert_eq!(line_of(svm("1 1:1\n-1 0:3\n")), 2);
        assert_eq!(line_of(svm("1 1:1\n-1 2=3\n")), 2);
        assert_eq!(line_of(svm("1 1:1\n1 2:1\n")), 1);
    }

    #[test]
    fn format_from_extension() {
        assert_eq!(format_for(Path::new("a/b.CSV")), DataFormat::Csv);
        assert_eq!(format_for(Path::new("covtype.libsvm")), DataFormat::Libsvm);
    }
}
