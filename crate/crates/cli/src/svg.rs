//! Minimal standalone SVG line plots.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use qnlab::diagnostics::DiagnosticSeries;
use qnlab::pipeline::{read_sweep_csv, SWEEP_HEADER};

use crate::CliError;

const W: f64 = 640.0;
const H: f64 = 420.0;
const MARGIN: f64 = 64.0;

const ENERGY_COLUMNS: [&str; 7] = [
    "E_kin",
    "E_phi_e",
    "E_fluct",
    "H_kin",
    "H_mod",
    "energy_total",
    "free_energy",
];

pub struct Series<'a> {
    pub title: &'a str,
    pub x_label: &'a str,
    pub y_label: &'a str,
    pub x: &'a [f64],
    pub y: &'a [f64],
    pub log: bool,
}

fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    (0..=4).map(|k| lo + (hi - lo) * k as f64 / 4.0).collect()
}

fn range(v: &[f64]) -> (f64, f64) {
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi > lo {
        (lo, hi)
    } else {
        let pad = if lo == 0.0 { 1.0 } else { 0.05 * lo.abs() };
        (lo - pad, hi + pad)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Renders one polyline with axes and five ticks per axis.
pub fn render(s: &Series<'_>) -> Result<String, CliError> {
    if s.x.len() != s.y.len() || s.x.is_empty() {
        return Err(CliError::Usage(format!("nothing to plot for {}", s.title)));
    }
    let map = |v: f64| if s.log { v.log10() } else { v };
    if s.log && s.x.iter().chain(s.y).any(|v| !(*v > 0.0)) {
        return Err(CliError::Usage(format!(
            "log-log plot of {} needs positive values",
            s.title
        )));
    }
    let xs: Vec<f64> = s.x.iter().map(|v| map(*v)).collect();
    let ys: Vec<f64> = s.y.iter().map(|v| map(*v)).collect();
    if xs.iter().chain(&ys).any(|v| !v.is_finite()) {
        return Err(CliError::Usage(format!("non-finite values in {}", s.title)));
    }
    let (x0, x1) = range(&xs);
    let (y0, y1) = range(&ys);
    let px = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (W - 2.0 * MARGIN);
    let py = |y: f64| H - MARGIN - (y - y0) / (y1 - y0) * (H - 2.0 * MARGIN);
    let label = |v: f64| {
        if s.log {
            format!("1e{v:.2}")
        } else {
            format!("{v:.3e}")
        }
    };

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
        W / 2.0,
        escape(s.title)
    );
    let _ = writeln!(
        out,
        r#"<path d="M{m} {t} V{b} H{r}" fill="none" stroke="black"/>"#,
        m = MARGIN,
        t = MARGIN,
        b = H - MARGIN,
        r = W - MARGIN
    );
    for v in ticks(x0, x1) {
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            px(v),
            H - MARGIN + 16.0,
            label(v)
        );
    }
    for v in ticks(y0, y1) {
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            MARGIN - 4.0,
            py(v) + 4.0,
            label(v)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        W / 2.0,
        H - 16.0,
        escape(s.x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
        H / 2.0,
        H / 2.0,
        escape(s.y_label)
    );
    let points: Vec<String> = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| format!("{:.2},{:.2}", px(*x), py(*y)))
        .collect();
    let _ = writeln!(
        out,
        r#"<polyline points="{}" fill="none" stroke="steelblue" stroke-width="1.5"/>"#,
        points.join(" ")
    );
    out.push_str("</svg>\n");
    Ok(out)
}

/// Detects the CSV schema from its header and writes the matching plots.
pub fn plot_csv(csv_path: &Path, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let text = fs::read_to_string(csv_path)
        .map_err(|e| CliError::Usage(format!("{}: {e}", csv_path.display())))?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| CliError::Usage(format!("{} is empty", csv_path.display())))?;
    if lines.all(|l| l.trim().is_empty()) {
        return Err(CliError::Usage(format!(
            "{} has no data rows",
            csv_path.display()
        )));
    }
    fs::create_dir_all(out)?;
    let mut written = Vec::new();
    if header.split(',').eq(SWEEP_HEADER) {
        let rows = read_sweep_csv(text.as_bytes())?;
        let eps: Vec<f64> = rows.iter().map(|r| r.eps).collect();
        let h: Vec<f64> = rows.iter().map(|r| r.h_final).collect();
        let svg = render(&Series {
            title: "modulated energy at final time",
            x_label: "eps",
            y_label: "H(T)",
            x: &eps,
            y: &h,
            log: true,
        })?;
        let p = out.join("sweep_H.svg");
        fs::write(&p, svg)?;
        written.push(p);
    } else if header.starts_with("t,") {
        let series = DiagnosticSeries::read_csv(text.as_bytes())?;
        let t = series
            .column("t")
            .ok_or_else(|| CliError::Usage("missing t column".into()))?;
        for name in ENERGY_COLUMNS {
            let Some(y) = series.column(name) else {
                continue;
            };
            let svg = render(&Series {
                title: name,
                x_label: "t",
                y_label: name,
                x: &t,
                y: &y,
                log: false,
            })?;
            let p = out.join(format!("{name}.svg"));
            fs::write(&p, svg)?;
            written.push(p);
        }
    } else {
        return Err(CliError::Usage(format!(
            "{} matches neither the diagnostics nor the sweep schema",
            csv_path.display()
        )));
    }
    Ok(written)
}
