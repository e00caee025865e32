//! Measured-versus-model curves: a CSV for plotting elsewhere and a small
//! static SVG chart per algorithm.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::experiments::{Exp1Row, Exp2Row};
use super::export::write_csv;
use crate::error::{Error, Result};
use crate::model::{calibrate, memory_model, time_model, Calibration, MemoryConstants, Measurement, ModelParams};
use crate::parallel::AlgorithmId;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub algorithm: AlgorithmId,
    pub n: usize,
    pub m: usize,
    #[serde(rename = "P")]
    pub p: usize,
    pub t_model_s: Option<f64>,
    pub mem_model_elements: u64,
    /// Experiment 1 measurement, copied unchanged.
    pub measured_time: Option<f64>,
    /// Experiment 2 measurement, copied unchanged.
    pub measured_peak_elements: Option<u64>,
}

fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rows = Vec::new();
    for row in csv::Reader::from_reader(file).deserialize() {
        rows.push(row?);
    }
    Ok(rows)
}

pub fn read_exp1_csv(path: &Path) -> Result<Vec<Exp1Row>> {
    read_csv(path)
}

pub fn read_exp2_csv(path: &Path) -> Result<Vec<Exp2Row>> {
    read_csv(path)
}

/// Calibrates each algorithm present in `rows` on its measurements.
pub fn fit_exp1(rows: &[Exp1Row]) -> Result<BTreeMap<AlgorithmId, Calibration>> {
    let mut by_algo: BTreeMap<AlgorithmId, Vec<Measurement>> = BTreeMap::new();
    for r in rows {
        by_algo.entry(r.algorithm).or_default().push(Measurement {
            n: r.n,
            m: r.m,
            p: r.k,
            seconds: r.measured(),
        });
    }
    by_algo
        .into_iter()
        .map(|(algo, data)| calibrate(algo, &data).map(|c| (algo, c)))
        .collect()
}

/// One curve row per measured configuration.
pub fn curve_rows(
    params: &BTreeMap<AlgorithmId, ModelParams>,
    exp1: &[Exp1Row],
    exp2: &[Exp2Row],
    memory: &MemoryConstants,
) -> Vec<CurveRow> {
    let t = |algo: AlgorithmId, n, m, p| params.get(&algo).map(|c| time_model(algo, n, m, p, c));
    let from1 = exp1.iter().map(|r| CurveRow {
        algorithm: r.algorithm,
        n: r.n,
        m: r.m,
        p: r.k,
        t_model_s: t(r.algorithm, r.n, r.m, r.k),
        mem_model_elements: memory_model(r.algorithm, r.n, memory),
        measured_time: Some(r.measured()),
        measured_peak_elements: None,
    });
    let from2 = exp2.iter().map(|r| CurveRow {
        algorithm: r.algorithm,
        n: r.n,
        m: 2,
        p: 2,
        t_model_s: t(r.algorithm, r.n, 2, 2),
        mem_model_elements: memory_model(r.algorithm, r.n, memory),
        measured_time: None,
        measured_peak_elements: Some(r.peak_elements),
    });
    from1.chain(from2).collect()
}

/// Writes the curve CSV to `path` and `<path stem>.<algorithm>.svg` for each
/// algorithm. Returns the SVG paths.
pub fn emit_model_curves(
    params: &BTreeMap<AlgorithmId, ModelParams>,
    exp1: &[Exp1Row],
    exp2: &[Exp2Row],
    memory: &MemoryConstants,
    path: &Path,
) -> Result<Vec<PathBuf>> {
    let rows = curve_rows(params, exp1, exp2, memory);
    write_csv(path, &rows)?;
    let mut written = Vec::new();
    for algo in AlgorithmId::ALL {
        let mine: Vec<&CurveRow> = rows.iter().filter(|r| r.algorithm == algo).collect();
        if mine.is_empty() {
            continue;
        }
        let svg_path = path.with_extension(format!("{algo}.svg"));
        std::fs::write(&svg_path, render_svg(algo, &mine)).map_err(|e| Error::io(&svg_path, e))?;
        written.push(svg_path);
    }
    Ok(written)
}

struct Series {
    label: String,
    points: Vec<(f64, f64)>,
    dashed: bool,
}

const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

/// Time against process count (log scale) when the rows come from
/// Experiment 1, memory against data size otherwise.
pub fn render_svg(algo: AlgorithmId, rows: &[&CurveRow]) -> String {
    let timing: Vec<&&CurveRow> = rows.iter().filter(|r| r.measured_time.is_some()).collect();
    let mut series = Vec::new();
    let (title, x_label, y_label, log_x);
    if !timing.is_empty() {
        title = format!("{algo} sort: execution time");
        x_label = "processes (m)";
        y_label = "time";
        log_x = true;
        let mut cores: Vec<usize> = timing.iter().map(|r| r.p).collect();
        cores.dedup();
        cores.sort_unstable();
        cores.dedup();
        for p in cores {
            let at: Vec<&&&CurveRow> = timing.iter().filter(|r| r.p == p).collect();
            series.push(Series {
                label: format!("measured, P={p}"),
                points: at.iter().map(|r| (r.m as f64, r.measured_time.unwrap_or(0.0))).collect(),
                dashed: false,
            });
            if at.iter().all(|r| r.t_model_s.is_some()) {
                series.push(Series {
                    label: format!("model, P={p}"),
                    points: at.iter().map(|r| (r.m as f64, r.t_model_s.unwrap_or(0.0))).collect(),
                    dashed: true,
                });
            }
        }
    } else {
        title = format!("{algo} sort: memory (m=2, P=2)");
        x_label = "data size (n)";
        y_label = "elements";
        log_x = false;
        let mem: Vec<&&CurveRow> = rows.iter().filter(|r| r.measured_peak_elements.is_some()).collect();
        series.push(Series {
            label: "measured".into(),
            points: mem.iter().map(|r| (r.n as f64, r.measured_peak_elements.unwrap_or(0) as f64)).collect(),
            dashed: false,
        });
        series.push(Series {
            label: "model".into(),
            points: mem.iter().map(|r| (r.n as f64, r.mem_model_elements as f64)).collect(),
            dashed: true,
        });
    }
    chart(&title, x_label, y_label, log_x, &series)
}

fn chart(title: &str, x_label: &str, y_label: &str, log_x: bool, series: &[Series]) -> String {
    let (w, h, left, right, top, bottom) = (720.0, 440.0, 80.0, 190.0, 40.0, 60.0);
    let fx = |x: f64| if log_x { x.max(1e-12).log2() } else { x };
    let all: Vec<(f64, f64)> = series.iter().flat_map(|s| s.points.iter().copied()).collect();
    let span = |v: Vec<f64>| {
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !lo.is_finite() {
            (0.0, 1.0)
        } else if hi > lo {
            (lo, hi)
        } else {
            (lo - 0.5, hi + 0.5)
        }
    };
    let (x0, x1) = span(all.iter().map(|p| fx(p.0)).collect());
    let (_, y1) = span(all.iter().map(|p| p.1).collect());
    let y0 = 0.0;
    let y1 = if y1 > 0.0 { y1 * 1.05 } else { 1.0 };
    let px = |x: f64| left + (fx(x) - x0) / (x1 - x0) * (w - left - right);
    let py = |y: f64| h - bottom - (y - y0) / (y1 - y0) * (h - top - bottom);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{title}</text>"#, (w - right + left) / 2.0);
    let (ax0, ax1, ay0, ay1) = (left, w - right, h - bottom, top);
    let _ = writeln!(s, r#"<path d="M{ax0} {ay1} L{ax0} {ay0} L{ax1} {ay0}" stroke="black" fill="none"/>"#);
    for i in 0..=4 {
        let y = y0 + (y1 - y0) * i as f64 / 4.0;
        let _ = writeln!(s, r#"<text x="{}" y="{:.1}" text-anchor="end">{}</text>"#, ax0 - 6.0, py(y) + 4.0, tick(y));
    }
    let mut xs: Vec<f64> = all.iter().map(|p| p.0).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    for &x in &xs {
        let _ = writeln!(s, r#"<text x="{:.1}" y="{}" text-anchor="middle">{}</text>"#, px(x), ay0 + 16.0, tick(x));
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{x_label}</text>"#, (ax0 + ax1) / 2.0, h - 16.0);
    let _ = writeln!(
        s,
        r#"<text x="18" y="{0}" text-anchor="middle" transform="rotate(-90 18 {0})">{y_label}</text>"#,
        (ay0 + ay1) / 2.0
    );
    for (i, ser) in series.iter().enumerate() {
        let color = COLORS[(i / 2) % COLORS.len()];
        let dash = if ser.dashed { r#" stroke-dasharray="6 4""# } else { "" };
        let pts: Vec<String> = ser.points.iter().map(|&(x, y)| format!("{:.1},{:.1}", px(x), py(y))).collect();
        let _ = writeln!(s, r#"<polyline points="{}" stroke="{color}" fill="none" stroke-width="2"{dash}/>"#, pts.join(" "));
        if !ser.dashed {
            for &(x, y) in &ser.points {
                let _ = writeln!(s, r#"<circle cx="{:.1}" cy="{:.1}" r="3" fill="{color}"/>"#, px(x), py(y));
            }
        }
        let ly = top + 10.0 + 18.0 * i as f64;
        let _ = writeln!(s, r#"<line x1="{0}" y1="{ly}" x2="{1}" y2="{ly}" stroke="{color}" stroke-width="2"{dash}/>"#, ax1 + 12.0, ax1 + 36.0);
        let _ = writeln!(s, r#"<text x="{}" y="{}">{}</text>"#, ax1 + 42.0, ly + 4.0, ser.label);
    }
    s.push_str("</svg>\n");
    s
}

fn tick(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 {
        "0".into()
    } else if !(1e-2..1e5).contains(&a) {
        format!("{v:.2e}")
    } else if a >= 100.0 || v.fract() == 0.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.3}")
    }
}
