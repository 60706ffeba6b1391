//! Standalone SVG figures: particle scatter over density contours, and metric curves.
//!
//! Output depends only on the inputs, so identical inputs give identical bytes.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use partopt_core::diagnostics::GroundTruthGrid;
use partopt_core::{Error as CoreError, ParticleEnsemble};

use crate::error::{HarnessError, Result};
use crate::output::MetricRow;

/// Probability mass enclosed by each drawn contour.
pub const CONTOUR_MASSES: [f64; 5] = [0.1, 0.3, 0.5, 0.7, 0.9];

const SIZE: f64 = 480.0;
const MARGIN: f64 = 48.0;

fn write_file(path: &Path, svg: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    }
    std::fs::write(path, svg).map_err(|e| HarnessError::io(path, e))
}

/// Affine map from data coordinates to the plot area.
struct Frame {
    x: [f64; 2],
    y: [f64; 2],
    left: f64,
    top: f64,
    width: f64,
    height: f64,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        self.left + (x - self.x[0]) / (self.x[1] - self.x[0]) * self.width
    }
    fn py(&self, y: f64) -> f64 {
        self.top + (self.y[1] - y) / (self.y[1] - self.y[0]) * self.height
    }
}

/// `[lo, hi]` padded by 5%, widened around a single value.
fn padded(lo: f64, hi: f64) -> [f64; 2] {
    if hi - lo < 1e-12 {
        let w = lo.abs().max(1.0) * 0.1;
        [lo - w, hi + w]
    } else {
        let p = 0.05 * (hi - lo);
        [lo - p, hi + p]
    }
}

fn header(out: &mut String, width: f64, height: f64) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(out, r#"<rect width="{width}" height="{height}" fill="white"/>"#);
}

fn axes(out: &mut String, f: &Frame, xlabel: &str, ylabel: &str) {
    let (l, t, w, h) = (f.left, f.top, f.width, f.height);
    let _ = writeln!(
        out,
        r##"<rect x="{l:.2}" y="{t:.2}" width="{w:.2}" height="{h:.2}" fill="none" stroke="#444"/>"##
    );
    let b = t + h;
    let _ = writeln!(out, r#"<text x="{l:.2}" y="{:.2}" text-anchor="start">{}</text>"#, b + 14.0, tick(f.x[0]));
    let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, l + w, b + 14.0, tick(f.x[1]));
    let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, l - 4.0, b, tick(f.y[0]));
    let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, l - 4.0, t + 10.0, tick(f.y[1]));
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        l + w / 2.0,
        b + 30.0,
        escape(xlabel)
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" transform="rotate(-90 {:.2} {:.2})">{}</text>"#,
        l - 30.0,
        t + h / 2.0,
        l - 30.0,
        t + h / 2.0,
        escape(ylabel)
    );
}

fn tick(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-3) {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Iso-density segments of `grid` at `level`, by marching squares over cell centres.
pub fn contour_segments(grid: &GroundTruthGrid, level: f64) -> Vec<[(f64, f64); 2]> {
    let n = grid.resolution();
    let mut segs = Vec::new();
    for iy in 0..n.saturating_sub(1) {
        for ix in 0..n - 1 {
            // corners counter-clockwise from the lower left
            let idx = [(ix, iy), (ix + 1, iy), (ix + 1, iy + 1), (ix, iy + 1)];
            let v = idx.map(|(i, j)| grid.density(i, j));
            let p = idx.map(|(i, j)| grid.cell_centre(i, j));
            let above = v.map(|x| x >= level);
            let mut cross: [Option<(f64, f64)>; 4] = [None; 4];
            for e in 0..4 {
                let (a, b) = (e, (e + 1) % 4);
                if above[a] != above[b] {
                    let t = (level - v[a]) / (v[b] - v[a]);
                    cross[e] = Some((p[a].0 + t * (p[b].0 - p[a].0), p[a].1 + t * (p[b].1 - p[a].1)));
                }
            }
            let hits: Vec<usize> = (0..4).filter(|e| cross[*e].is_some()).collect();
            let pairs: &[(usize, usize)] = match hits.len() {
                2 => &[(hits[0], hits[1])][..],
                4 => {
                    let centre_above = v.iter().sum::<f64>() / 4.0 >= level;
                    // saddle: keep the diagonal that matches the centre connected
                    if above[0] == centre_above {
                        &[(0, 1), (2, 3)]
                    } else {
                        &[(3, 0), (1, 2)]
                    }
                }
                _ => &[],
            };
            for (a, b) in pairs {
                segs.push([cross[*a].expect("crossing"), cross[*b].expect("crossing")]);
            }
        }
    }
    segs
}

pub fn scatter_svg(ensemble: &ParticleEnsemble, grid: Option<&GroundTruthGrid>, title: &str) -> Result<String> {
    if ensemble.dim() != 2 {
        return Err(CoreError::DimensionMismatch {
            expected: 2,
            found: ensemble.dim(),
        }
        .into());
    }
    let (xr, yr) = match grid {
        Some(g) => {
            let b = g.bbox();
            ([b[0], b[1]], [b[2], b[3]])
        }
        None => {
            let col = |d: usize| {
                let v: Vec<f64> = ensemble.positions().iter_rows().map(|r| r[d]).collect();
                let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                padded(lo, hi)
            };
            (col(0), col(1))
        }
    };
    let f = Frame {
        x: xr,
        y: yr,
        left: MARGIN,
        top: 28.0,
        width: SIZE,
        height: SIZE,
    };
    let mut out = String::new();
    header(&mut out, SIZE + MARGIN + 16.0, SIZE + 28.0 + MARGIN);
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="18" text-anchor="middle" font-size="13">{}</text>"#,
        f.left + f.width / 2.0,
        escape(title)
    );
    let _ = writeln!(
        out,
        r#"<clipPath id="plot"><rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}"/></clipPath>"#,
        f.left, f.top, f.width, f.height
    );
    let _ = writeln!(out, r#"<g clip-path="url(#plot)">"#);
    if let Some(g) = grid {
        let levels = g.contour_levels(&CONTOUR_MASSES);
        for (k, level) in levels.iter().enumerate() {
            let mut d = String::new();
            for [a, b] in contour_segments(g, *level) {
                let _ = write!(d, "M{:.2} {:.2}L{:.2} {:.2}", f.px(a.0), f.py(a.1), f.px(b.0), f.py(b.1));
            }
            let shade = 60 + 30 * k;
            let _ = writeln!(
                out,
                r#"<path d="{d}" fill="none" stroke="rgb({shade},{shade},200)" stroke-width="1"/>"#
            );
        }
    }
    for r in ensemble.positions().iter_rows() {
        let _ = writeln!(
            out,
            r##"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="#c0392b" fill-opacity="0.8"/>"##,
            f.px(r[0]),
            f.py(r[1])
        );
    }
    let _ = writeln!(out, "</g>");
    axes(&mut out, &f, "θ₁", "θ₂");
    out.push_str("</svg>\n");
    Ok(out)
}

pub fn render_scatter(ensemble: &ParticleEnsemble, grid: Option<&GroundTruthGrid>, path: &Path) -> Result<()> {
    let title = path.file_stem().and_then(|s| s.to_str()).unwrap_or("particles");
    write_file(path, &scatter_svg(ensemble, grid, title)?)
}

/// One panel per metric: a thin trace per seed and a thick trace for the mean over seeds.
pub fn curves_svg(rows: &[MetricRow]) -> String {
    let mut metrics: Vec<&str> = Vec::new();
    for r in rows {
        if !metrics.contains(&r.metric.as_str()) {
            metrics.push(&r.metric);
        }
    }
    let panel_h = 200.0;
    let gap = 64.0;
    let width = SIZE + MARGIN + 24.0;
    let height = (metrics.len().max(1) as f64) * (panel_h + gap) + 16.0;
    let mut out = String::new();
    header(&mut out, width, height);
    if metrics.is_empty() {
        let _ = writeln!(out, r#"<text x="{:.2}" y="40" text-anchor="middle">no records</text>"#, width / 2.0);
    }
    for (k, metric) in metrics.iter().enumerate() {
        let mine: Vec<&MetricRow> = rows.iter().filter(|r| r.metric == *metric).collect();
        let mut per_seed: BTreeMap<u64, Vec<(usize, f64)>> = BTreeMap::new();
        let mut per_iter: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
        for r in &mine {
            per_seed.entry(r.seed).or_default().push((r.iteration, r.value));
            per_iter.entry(r.iteration).or_default().push(r.value);
        }
        let it_lo = *per_iter.keys().next().expect("non-empty") as f64;
        let it_hi = *per_iter.keys().next_back().expect("non-empty") as f64;
        let v_lo = mine.iter().map(|r| r.value).fold(f64::INFINITY, f64::min);
        let v_hi = mine.iter().map(|r| r.value).fold(f64::NEG_INFINITY, f64::max);
        let f = Frame {
            x: if it_hi > it_lo { [it_lo, it_hi] } else { padded(it_lo, it_hi) },
            y: padded(v_lo, v_hi),
            left: MARGIN,
            top: 24.0 + k as f64 * (panel_h + gap),
            width: SIZE,
            height: panel_h,
        };
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="13">{}</text>"#,
            f.left + f.width / 2.0,
            f.top - 6.0,
            escape(metric)
        );
        for pts in per_seed.values_mut() {
            pts.sort_by_key(|p| p.0);
            let _ = writeln!(
                out,
                r##"<polyline points="{}" fill="none" stroke="#9ab" stroke-width="1"/>"##,
                polyline(&f, pts.iter().copied())
            );
        }
        let mean = per_iter
            .iter()
            .map(|(it, v)| (*it, v.iter().sum::<f64>() / v.len() as f64));
        let _ = writeln!(
            out,
            r##"<polyline points="{}" fill="none" stroke="#123" stroke-width="2.5"/>"##,
            polyline(&f, mean)
        );
        axes(&mut out, &f, "iteration", metric);
    }
    out.push_str("</svg>\n");
    out
}

fn polyline(f: &Frame, pts: impl Iterator<Item = (usize, f64)>) -> String {
    pts.map(|(it, v)| format!("{:.2},{:.2}", f.px(it as f64), f.py(v)))
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn render_curves(rows: &[MetricRow], path: &Path) -> Result<()> {
    write_file(path, &curves_svg(rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use partopt_core::targets::GaussianMixture;

    #[test]
    fn single_particle_scatter() {
        let e = ParticleEnsemble::from_rows(&[[0.5, -0.5]]).unwrap();
        let svg = scatter_svg(&e, None, "one").unwrap();
        assert_eq!(svg.matches("<circle").count(), 1);
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
    }

    #[test]
    fn scatter_rejects_other_dimensions() {
        let e = ParticleEnsemble::from_rows(&[[0.5, -0.5, 1.0]]).unwrap();
        assert!(scatter_svg(&e, None, "x").is_err());
    }

    #[test]
    fn unit_gaussian_contours_are_circles() {
        let g = GroundTruthGrid::new(&GaussianMixture::standard(2).unwrap(), [-6.0, 6.0, -6.0, 6.0], 200).unwrap();
        let levels = g.contour_levels(&CONTOUR_MASSES);
        for (q, level) in CONTOUR_MASSES.iter().zip(&levels) {
            // the superlevel set of mass q is the disc of radius √(-2 ln(1-q))
            let r = (-2.0 * (1.0 - q).ln()).sqrt();
            let segs = contour_segments(&g, *level);
            assert!(!segs.is_empty());
            for s in segs {
                for (x, y) in s {
                    assert!(((x * x + y * y).sqrt() - r).abs() < 0.08, "q={q}");
                }
            }
        }
    }

    #[test]
    fn curves_have_labels_and_traces() {
        let rows: Vec<MetricRow> = (0..2u64)
            .flat_map(|s| {
                (0..3).map(move |i| MetricRow {
                    iteration: 10 * i,
                    metric: "mmd".into(),
                    seed: s,
                    value: (i as f64 + 1.0) * (s as f64 + 1.0),
                })
            })
            .collect();
        let svg = curves_svg(&rows);
        assert_eq!(svg.matches("<polyline").count(), 3);
        assert!(svg.contains(">iteration<") && svg.contains(">mmd<"));
        assert_eq!(svg, curves_svg(&rows));
    }
}
