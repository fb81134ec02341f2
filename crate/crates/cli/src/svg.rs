//! Self-contained SVG plots written without a plotting dependency.
//!
//! Output depends only on the input numbers, so identical inputs give
//! identical bytes.

use std::fmt::Write as _;
use std::path::Path;

use manimet_core::metrics::{Entry, EntryMatrix};

const FONT: &str = "font-family=\"sans-serif\" font-size=\"11\"";
const LOW: (f64, f64, f64) = (247.0, 251.0, 255.0);
const HIGH: (f64, f64, f64) = (8.0, 48.0, 107.0);
pub const UNBOUNDED_COLOR: &str = "#d62728";
pub const UNDEFINED_COLOR: &str = "#9e9e9e";

/// Linear white-to-blue ramp, `t` clamped to `[0, 1]`.
pub fn ramp(t: f64) -> String {
    let t = if t.is_finite() {
        t.clamp(0.0, 1.0)
    } else {
        0.0
    };
    let mix = |a: f64, b: f64| (a + (b - a) * t).round() as u8;
    format!(
        "#{:02x}{:02x}{:02x}",
        mix(LOW.0, HIGH.0),
        mix(LOW.1, HIGH.1),
        mix(LOW.2, HIGH.2)
    )
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.4}")
    } else if v.is_nan() {
        "nan".into()
    } else {
        "inf".into()
    }
}

fn open(out: &mut String, w: f64, h: f64, title: &str) {
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w:.0}\" height=\"{h:.0}\" viewBox=\"0 0 {w:.0} {h:.0}\">"
    );
    let _ = writeln!(
        out,
        "<rect width=\"{w:.0}\" height=\"{h:.0}\" fill=\"#ffffff\"/>"
    );
    let _ = writeln!(
        out,
        "<text x=\"10\" y=\"18\" {FONT} font-size=\"13\">{}</text>",
        esc(title)
    );
}

/// Heatmap of a matrix of entries. Finite values share one linear color
/// scale; `inf` and `nan` cells get their own colors and appear in the legend.
pub fn heatmap_svg(m: &EntryMatrix, title: &str) -> String {
    let (rows, cols) = (m.rows(), m.cols());
    let cell = 36.0;
    let left = 44.0;
    let top = 48.0;
    let legend_w = 150.0;
    let w = left + cols as f64 * cell + legend_w;
    let h = (top + rows as f64 * cell + 30.0).max(top + 170.0);
    let finite: Vec<f64> = m.entries.iter().filter_map(|e| e.value()).collect();
    let lo = finite.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = finite.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (lo, hi) = if finite.is_empty() {
        (0.0, 1.0)
    } else {
        (lo, hi)
    };
    let span = if hi > lo { hi - lo } else { 1.0 };

    let mut out = String::new();
    open(&mut out, w, h, title);
    for (j, label) in m.col_labels.iter().enumerate() {
        let x = left + (j as f64 + 0.5) * cell;
        let _ = writeln!(
            out,
            "<text x=\"{x:.1}\" y=\"{:.1}\" {FONT} text-anchor=\"middle\">{label}</text>",
            top - 6.0
        );
    }
    for (i, label) in m.row_labels.iter().enumerate() {
        let y = top + (i as f64 + 0.5) * cell + 4.0;
        let _ = writeln!(
            out,
            "<text x=\"{:.1}\" y=\"{y:.1}\" {FONT} text-anchor=\"end\">{label}</text>",
            left - 6.0
        );
        for j in 0..cols {
            let e = m.get(i, j);
            let fill = match e {
                Entry::Value(v) => ramp((v - lo) / span),
                Entry::Unbounded => UNBOUNDED_COLOR.to_string(),
                Entry::Undefined => UNDEFINED_COLOR.to_string(),
            };
            let _ = writeln!(
                out,
                "<rect x=\"{:.1}\" y=\"{:.1}\" width=\"{cell:.1}\" height=\"{cell:.1}\" fill=\"{fill}\" stroke=\"#ffffff\"><title>({label},{}) {}</title></rect>",
                left + j as f64 * cell,
                top + i as f64 * cell,
                m.col_labels[j],
                e.to_text()
            );
        }
    }

    let lx = left + cols as f64 * cell + 24.0;
    let steps = 10;
    let bar_h = 100.0;
    for k in 0..steps {
        let t = 1.0 - (k as f64 + 0.5) / steps as f64;
        let _ = writeln!(
            out,
            "<rect x=\"{lx:.1}\" y=\"{:.1}\" width=\"16\" height=\"{:.1}\" fill=\"{}\"/>",
            top + k as f64 * bar_h / steps as f64,
            bar_h / steps as f64,
            ramp(t)
        );
    }
    let _ = writeln!(
        out,
        "<text x=\"{:.1}\" y=\"{:.1}\" {FONT}>{}</text>",
        lx + 22.0,
        top + 9.0,
        num(hi)
    );
    let _ = writeln!(
        out,
        "<text x=\"{:.1}\" y=\"{:.1}\" {FONT}>{}</text>",
        lx + 22.0,
        top + bar_h,
        num(lo)
    );
    let sw = top + bar_h + 16.0;
    let _ = writeln!(
        out,
        "<rect x=\"{lx:.1}\" y=\"{sw:.1}\" width=\"16\" height=\"12\" fill=\"{UNBOUNDED_COLOR}\"/>"
    );
    let _ = writeln!(
        out,
        "<text x=\"{:.1}\" y=\"{:.1}\" {FONT}>inf</text>",
        lx + 22.0,
        sw + 10.0
    );
    let _ = writeln!(
        out,
        "<rect x=\"{lx:.1}\" y=\"{:.1}\" width=\"16\" height=\"12\" fill=\"{UNDEFINED_COLOR}\"/>",
        sw + 18.0
    );
    let _ = writeln!(
        out,
        "<text x=\"{:.1}\" y=\"{:.1}\" {FONT}>nan</text>",
        lx + 22.0,
        sw + 28.0
    );
    out.push_str("</svg>\n");
    out
}

/// One bar of a spectrum plot.
#[derive(Debug, Clone, PartialEq)]
pub struct Bar {
    pub label: String,
    pub value: f64,
    pub stderr: f64,
}

/// Bar chart with standard-error whiskers. Negative values hang below the
/// zero line.
pub fn spectrum_svg(bars: &[Bar], title: &str, y_label: &str) -> String {
    let bw = 28.0;
    let left = 56.0;
    let top = 36.0;
    let plot_h = 200.0;
    let w = left + (bars.len().max(1) as f64) * bw + 20.0;
    let h = top + plot_h + 40.0;
    let lo = bars
        .iter()
        .map(|b| b.value - b.stderr.max(0.0))
        .filter(|v| v.is_finite())
        .fold(0.0, f64::min);
    let hi = bars
        .iter()
        .map(|b| b.value + b.stderr.max(0.0))
        .filter(|v| v.is_finite())
        .fold(0.0, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };
    let y = |v: f64| top + (hi - v) / span * plot_h;

    let mut out = String::new();
    open(&mut out, w.max(220.0), h, title);
    let _ = writeln!(
        out,
        "<line x1=\"{left:.1}\" y1=\"{top:.1}\" x2=\"{left:.1}\" y2=\"{:.1}\" stroke=\"#000000\"/>",
        top + plot_h
    );
    for v in [hi, 0.0, lo] {
        let _ = writeln!(
            out,
            "<text x=\"{:.1}\" y=\"{:.1}\" {FONT} text-anchor=\"end\">{}</text>",
            left - 4.0,
            y(v) + 4.0,
            num(v)
        );
    }
    let _ = writeln!(
        out,
        "<line x1=\"{left:.1}\" y1=\"{0:.1}\" x2=\"{1:.1}\" y2=\"{0:.1}\" stroke=\"#000000\"/>",
        y(0.0),
        left + bars.len() as f64 * bw
    );
    let _ = writeln!(
        out,
        "<text x=\"12\" y=\"{:.1}\" {FONT} transform=\"rotate(-90 12 {:.1})\" text-anchor=\"middle\">{}</text>",
        top + plot_h / 2.0,
        top + plot_h / 2.0,
        esc(y_label)
    );
    for (k, b) in bars.iter().enumerate() {
        let x = left + k as f64 * bw + 4.0;
        if b.value.is_finite() {
            let (y0, y1) = (y(b.value.max(0.0)), y(b.value.min(0.0)));
            let _ = writeln!(
                out,
                "<rect x=\"{x:.1}\" y=\"{y0:.1}\" width=\"{:.1}\" height=\"{:.1}\" fill=\"#4c72b0\"><title>{} {}</title></rect>",
                bw - 8.0,
                (y1 - y0).max(0.5),
                esc(&b.label),
                num(b.value)
            );
            if b.stderr.is_finite() && b.stderr > 0.0 {
                let cx = x + (bw - 8.0) / 2.0;
                let _ = writeln!(
                    out,
                    "<line x1=\"{cx:.1}\" y1=\"{:.1}\" x2=\"{cx:.1}\" y2=\"{:.1}\" stroke=\"#000000\"/>",
                    y(b.value + b.stderr),
                    y(b.value - b.stderr)
                );
            }
        }
        let _ = writeln!(
            out,
            "<text x=\"{:.1}\" y=\"{:.1}\" {FONT} text-anchor=\"middle\">{}</text>",
            x + (bw - 8.0) / 2.0,
            top + plot_h + 16.0,
            esc(&b.label)
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Line plot of `(x, y)` points on a log-scaled x axis.
pub fn line_svg(points: &[(f64, f64)], title: &str, x_label: &str, y_label: &str) -> String {
    let left = 64.0;
    let top = 36.0;
    let (pw, ph) = (320.0, 200.0);
    let w = left + pw + 24.0;
    let h = top + ph + 48.0;
    let pts: Vec<(f64, f64)> = points
        .iter()
        .copied()
        .filter(|(x, y)| *x > 0.0 && y.is_finite())
        .collect();
    let lx: Vec<f64> = pts.iter().map(|p| p.0.log10()).collect();
    let (x0, x1) = bounds(&lx);
    let (y0, y1) = bounds(&pts.iter().map(|p| p.1).chain([0.0]).collect::<Vec<_>>());
    let sx = |v: f64| left + (v - x0) / (x1 - x0) * pw;
    let sy = |v: f64| top + (y1 - v) / (y1 - y0) * ph;

    let mut out = String::new();
    open(&mut out, w, h, title);
    let _ = writeln!(
        out,
        "<path d=\"M{left:.1} {top:.1} V{0:.1} H{1:.1}\" fill=\"none\" stroke=\"#000000\"/>",
        top + ph,
        left + pw
    );
    for v in [y0, y1] {
        let _ = writeln!(
            out,
            "<text x=\"{:.1}\" y=\"{:.1}\" {FONT} text-anchor=\"end\">{}</text>",
            left - 4.0,
            sy(v) + 4.0,
            num(v)
        );
    }
    for (p, l) in pts.iter().zip(&lx) {
        let _ = writeln!(
            out,
            "<text x=\"{:.1}\" y=\"{:.1}\" {FONT} text-anchor=\"middle\">{}</text>",
            sx(*l),
            top + ph + 16.0,
            p.0
        );
    }
    let _ = writeln!(
        out,
        "<text x=\"{:.1}\" y=\"{:.1}\" {FONT} text-anchor=\"middle\">{}</text>",
        left + pw / 2.0,
        top + ph + 36.0,
        esc(x_label)
    );
    let _ = writeln!(
        out,
        "<text x=\"14\" y=\"{0:.1}\" {FONT} transform=\"rotate(-90 14 {0:.1})\" text-anchor=\"middle\">{1}</text>",
        top + ph / 2.0,
        esc(y_label)
    );
    if !pts.is_empty() {
        let d: Vec<String> = pts
            .iter()
            .zip(&lx)
            .enumerate()
            .map(|(k, (p, l))| {
                format!(
                    "{}{:.1} {:.1}",
                    if k == 0 { 'M' } else { 'L' },
                    sx(*l),
                    sy(p.1)
                )
            })
            .collect();
        let _ = writeln!(
            out,
            "<path d=\"{}\" fill=\"none\" stroke=\"#4c72b0\" stroke-width=\"2\"/>",
            d.join(" ")
        );
        for (p, l) in pts.iter().zip(&lx) {
            let _ = writeln!(
                out,
                "<circle cx=\"{:.1}\" cy=\"{:.1}\" r=\"3\" fill=\"#4c72b0\"><title>{} {}</title></circle>",
                sx(*l),
                sy(p.1),
                p.0,
                num(p.1)
            );
        }
    }
    out.push_str("</svg>\n");
    out
}

fn bounds(v: &[f64]) -> (f64, f64) {
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !lo.is_finite() || !hi.is_finite() {
        (0.0, 1.0)
    } else if hi > lo {
        (lo, hi)
    } else {
        (lo - 0.5, hi + 0.5)
    }
}

pub fn emit_heatmap_svg(m: &EntryMatrix, title: &str, path: &Path) -> std::io::Result<()> {
    std::fs::write(path, heatmap_svg(m, title))
}

pub fn emit_spectrum_svg(bars: &[Bar], title: &str, path: &Path) -> std::io::Result<()> {
    std::fs::write(path, spectrum_svg(bars, title, "H (nats)"))
}
