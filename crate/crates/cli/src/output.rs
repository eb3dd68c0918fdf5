// SPDX-License-Identifier: Apache-2.0

//! CSV, metadata and SVG writers. Numbers use 12 significant digits and no
//! timestamps, so identical inputs give identical files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use ionprobe::dynamics::SignalTrace;
use ionprobe::figures::FigureData;

use crate::runner::SweepTable;
use crate::CliError;

const MODE_NAMES: [&str; 2] = ["x", "y"];

pub fn num(v: f64) -> String {
    format!("{v:.11e}")
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text)
        .map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))
}

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir)
        .map_err(|e| CliError::Config(format!("cannot create {}: {e}", dir.display())))
}

/// `t_seconds,p_up,tail_x[,tail_y]`.
pub fn signal_csv(trace: &SignalTrace) -> String {
    let modes = trace.tails.first().map_or(0, Vec::len);
    let mut out = String::from("t_seconds,p_up");
    for k in 0..modes {
        out.push_str(&format!(
            ",tail_{}",
            MODE_NAMES.get(k).copied().unwrap_or("m")
        ));
    }
    out.push('\n');
    for i in 0..trace.len() {
        out.push_str(&num(trace.times[i]));
        out.push(',');
        out.push_str(&num(trace.p_up[i]));
        for k in 0..modes {
            out.push(',');
            out.push_str(&num(trace.tails[i][k]));
        }
        out.push('\n');
    }
    out
}

pub fn sweep_csv(table: &SweepTable) -> String {
    let mut out = table.columns.join(",");
    out.push('\n');
    for row in &table.rows {
        let cells: Vec<String> = row.iter().map(|&v| num(v)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Long format `series,x,y` so series may have different grids.
pub fn figure_csv(data: &FigureData) -> String {
    let mut out = String::from("series,x,y\n");
    for s in &data.series {
        for (x, y) in s.x.iter().zip(&s.y) {
            let _ = writeln!(out, "{},{},{}", s.name, num(*x), num(*y));
        }
    }
    out
}

pub fn write_text(dir: &Path, file: &str, text: &str) -> Result<PathBuf, CliError> {
    let path = dir.join(file);
    write(&path, text)?;
    Ok(path)
}

/// Reads a signal CSV with at least the `t_seconds` and `p_up` columns.
pub fn read_signal_csv(path: &Path) -> Result<SignalTrace, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let bad = |what: String| CliError::Config(format!("{}: {what}", path.display()));
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: Vec<&str> = lines
        .next()
        .ok_or_else(|| bad("empty file".into()))?
        .split(',')
        .map(str::trim)
        .collect();
    let col = |name: &str| {
        header
            .iter()
            .position(|h| *h == name)
            .ok_or_else(|| bad(format!("missing column '{name}'")))
    };
    let (ti, pi) = (col("t_seconds")?, col("p_up")?);
    let mut times = Vec::new();
    let mut p_up = Vec::new();
    for (n, line) in lines.enumerate() {
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        let parse = |i: usize| -> Result<f64, CliError> {
            cells
                .get(i)
                .and_then(|c| c.parse().ok())
                .ok_or_else(|| bad(format!("row {} is malformed", n + 2)))
        };
        times.push(parse(ti)?);
        p_up.push(parse(pi)?);
    }
    Ok(SignalTrace::new(times, p_up)?)
}

const COLORS: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b",
];

/// A line plot with linear axes. Series with few points are drawn as dots.
pub fn svg_plot(
    title: &str,
    x_label: &str,
    y_label: &str,
    series: &[(&str, &[f64], &[f64])],
) -> String {
    let (w, h) = (720.0, 460.0);
    let (left, right, top, bottom) = (80.0, 170.0, 40.0, 60.0);
    let finite = |v: &&f64| v.is_finite();
    let xs = series.iter().flat_map(|s| s.1.iter()).filter(finite);
    let ys = series.iter().flat_map(|s| s.2.iter()).filter(finite);
    let (mut x0, mut x1) = xs.fold((f64::MAX, f64::MIN), |(a, b), &v| (a.min(v), b.max(v)));
    let (mut y0, mut y1) = ys.fold((f64::MAX, f64::MIN), |(a, b), &v| (a.min(v), b.max(v)));
    if !(x1 > x0) {
        x0 -= 0.5;
        x1 = x0 + 1.0;
    }
    if !(y1 > y0) {
        y0 -= 0.5;
        y1 = y0 + 1.0;
    }
    let pad = 0.05 * (y1 - y0);
    let (y0, y1) = (y0 - pad, y1 + pad);
    let pw = w - left - right;
    let ph = h - top - bottom;
    let px = |x: f64| left + (x - x0) / (x1 - x0) * pw;
    let py = |y: f64| top + (y1 - y) / (y1 - y0) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
        left + pw / 2.0,
        escape(title)
    );
    let _ = writeln!(
        s,
        r#"<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    for k in 0..=4 {
        let fx = x0 + (x1 - x0) * k as f64 / 4.0;
        let fy = y0 + (y1 - y0) * k as f64 / 4.0;
        let _ = writeln!(
            s,
            r#"<line x1="{0:.2}" y1="{1:.2}" x2="{0:.2}" y2="{2:.2}" stroke="black"/><text x="{0:.2}" y="{3:.2}" text-anchor="middle">{4}</text>"#,
            px(fx),
            top + ph,
            top + ph + 5.0,
            top + ph + 20.0,
            tick(fx)
        );
        let _ = writeln!(
            s,
            r#"<line x1="{0:.2}" y1="{1:.2}" x2="{2:.2}" y2="{1:.2}" stroke="black"/><text x="{3:.2}" y="{4:.2}" text-anchor="end">{5}</text>"#,
            left - 5.0,
            py(fy),
            left,
            left - 8.0,
            py(fy) + 4.0,
            tick(fy)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        left + pw / 2.0,
        h - 15.0,
        escape(x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{0}" text-anchor="middle" transform="rotate(-90 18 {0})">{1}</text>"#,
        top + ph / 2.0,
        escape(y_label)
    );
    for (i, (name, x, y)) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let pts: Vec<(f64, f64)> = x
            .iter()
            .zip(y.iter())
            .filter(|(a, b)| a.is_finite() && b.is_finite())
            .map(|(&a, &b)| (px(a), py(b)))
            .collect();
        if pts.len() > 40 {
            let coords: Vec<String> = pts.iter().map(|(a, b)| format!("{a:.2},{b:.2}")).collect();
            let _ = writeln!(
                s,
                r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                coords.join(" ")
            );
        } else {
            for (a, b) in &pts {
                let _ = writeln!(
                    s,
                    r#"<circle cx="{a:.2}" cy="{b:.2}" r="3" fill="{color}"/>"#
                );
            }
        }
        let ly = top + 12.0 + 18.0 * i as f64;
        let lx = left + pw + 12.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}">{}</text>"#,
            lx + 20.0,
            lx + 26.0,
            ly + 4.0,
            escape(name)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn tick(v: f64) -> String {
    if v == 0.0 || (1e-2..1e4).contains(&v.abs()) {
        format!("{v:.3}")
    } else {
        format!("{v:.2e}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}
