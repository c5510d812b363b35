//! Minimal SVG drawing for the comparison bar chart and the epoch curves.

use std::fmt::Write;

use crate::eval::report::{ComparisonReport, Split};
use crate::models::EpochCurve;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 60.0;
const COLOURS: [&str; 6] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"];

fn header(title: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">{}</text>\n",
        WIDTH / 2.0,
        escape(title)
    )
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn axes(out: &mut String, y_max: f64, y_label: &str) {
    let (x0, y0, x1, y1) = (MARGIN, HEIGHT - MARGIN, WIDTH - MARGIN / 2.0, MARGIN);
    let _ = writeln!(out, "<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x1}\" y2=\"{y0}\" stroke=\"black\"/>");
    let _ = writeln!(out, "<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x0}\" y2=\"{y1}\" stroke=\"black\"/>");
    for i in 0..=4 {
        let v = y_max * f64::from(i) / 4.0;
        let y = y0 - (y0 - y1) * f64::from(i) / 4.0;
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{:.1}\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">{:.2}</text>",
            x0 - 6.0,
            y + 4.0,
            v
        );
    }
    let _ = writeln!(
        out,
        "<text x=\"16\" y=\"{}\" transform=\"rotate(-90 16 {})\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">{}</text>",
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        escape(y_label)
    );
}

/// Grouped bars of mean train/test MAE with ±SD whiskers.
pub fn comparison_chart(report: &ComparisonReport) -> String {
    let mut out = header("Mean MAE across folds");
    let y_max = report
        .rows
        .iter()
        .map(|r| r.mean_mae + r.sd_mae)
        .fold(0.0_f64, f64::max)
        .max(1e-12)
        * 1.1;
    axes(&mut out, y_max, "MAE (mmol/L)");
    let groups = report.groups().max(1) as f64;
    let slot = (WIDTH - 1.5 * MARGIN) / groups;
    let bar = slot / 3.0;
    let plot_h = HEIGHT - 2.0 * MARGIN;
    for (g, pair) in report.rows.chunks(2).enumerate() {
        let x_base = MARGIN + slot * g as f64 + bar / 2.0;
        for (i, r) in pair.iter().enumerate() {
            let h = plot_h * r.mean_mae / y_max;
            let x = x_base + bar * i as f64;
            let y = HEIGHT - MARGIN - h;
            let colour = if r.split == Split::Train { COLOURS[0] } else { COLOURS[1] };
            let _ = writeln!(
                out,
                "<rect x=\"{x:.1}\" y=\"{y:.1}\" width=\"{:.1}\" height=\"{h:.1}\" fill=\"{colour}\"/>",
                bar * 0.9
            );
            let cx = x + bar * 0.45;
            let lo = HEIGHT - MARGIN - plot_h * (r.mean_mae - r.sd_mae).max(0.0) / y_max;
            let hi = HEIGHT - MARGIN - plot_h * (r.mean_mae + r.sd_mae) / y_max;
            let _ = writeln!(
                out,
                "<line x1=\"{cx:.1}\" y1=\"{lo:.1}\" x2=\"{cx:.1}\" y2=\"{hi:.1}\" stroke=\"black\"/>"
            );
        }
        if let Some(r) = pair.first() {
            let _ = writeln!(
                out,
                "<text x=\"{:.1}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">{} ({})</text>",
                x_base + bar,
                HEIGHT - MARGIN + 16.0,
                r.model,
                r.preprocessing
            );
        }
    }
    let _ = writeln!(
        out,
        "<text x=\"{}\" y=\"44\" font-family=\"sans-serif\" font-size=\"11\" fill=\"{}\">train</text>\
         <text x=\"{}\" y=\"44\" font-family=\"sans-serif\" font-size=\"11\" fill=\"{}\">test</text>",
        WIDTH - 140.0,
        COLOURS[0],
        WIDTH - 90.0,
        COLOURS[1]
    );
    out.push_str("</svg>\n");
    out
}

/// One train (solid) and one validation (dashed) polyline per fold.
pub fn epoch_chart(title: &str, curves: &[EpochCurve]) -> String {
    let mut out = header(title);
    let y_max = curves
        .iter()
        .flat_map(|c| c.train_mae.iter().chain(&c.val_mae))
        .copied()
        .fold(0.0_f64, f64::max)
        .max(1e-12)
        * 1.05;
    axes(&mut out, y_max, "MAE (mmol/L)");
    let epochs = curves.iter().map(|c| c.train_mae.len()).max().unwrap_or(1).max(2);
    let plot_w = WIDTH - 1.5 * MARGIN;
    let plot_h = HEIGHT - 2.0 * MARGIN;
    let point = |i: usize, v: f64| {
        (
            MARGIN + plot_w * i as f64 / (epochs - 1) as f64,
            HEIGHT - MARGIN - plot_h * v / y_max,
        )
    };
    for (k, c) in curves.iter().enumerate() {
        let colour = COLOURS[k % COLOURS.len()];
        for (series, dash) in [(&c.train_mae, ""), (&c.val_mae, " stroke-dasharray=\"4 3\"")] {
            if series.is_empty() {
                continue;
            }
            let pts: Vec<String> = series
                .iter()
                .enumerate()
                .map(|(i, &v)| {
                    let (x, y) = point(i, v);
                    format!("{x:.1},{y:.1}")
                })
                .collect();
            let _ = writeln!(
                out,
                "<polyline fill=\"none\" stroke=\"{colour}\"{dash} points=\"{}\"/>",
                pts.join(" ")
            );
        }
    }
    let _ = writeln!(
        out,
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">epoch</text>",
        WIDTH / 2.0,
        HEIGHT - 20.0
    );
    out.push_str("</svg>\n");
    out
}
