//! Minimal SVG scatter rendering for the report subcommand: three
//! pairwise feature panels, points colored by quality label.

use gait_triage::{FeatureRow, GaitLabel};

const PANEL_W: f64 = 280.0;
const PANEL_H: f64 = 240.0;
const MARGIN: f64 = 40.0;

/// Panel definition: x axis name, y axis name, point projection.
type Panel = (&'static str, &'static str, fn(&FeatureRow) -> (f64, f64));

const PAIRS: [Panel; 3] = [
    ("prominence", "residual", |r| {
        (r.features.avg_peak_prominence, r.features.rms_residual)
    }),
    ("prominence", "distance", |r| {
        (r.features.avg_peak_prominence, r.features.avg_peak_distance)
    }),
    ("residual", "distance", |r| {
        (r.features.rms_residual, r.features.avg_peak_distance)
    }),
];

fn color(label: Option<GaitLabel>) -> &'static str {
    match label {
        Some(GaitLabel::GoodGait) => "#2a9d8f",
        Some(GaitLabel::BadGait) => "#e76f51",
        None => "#999999",
    }
}

fn axis_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::MAX, f64::MIN);
    for v in values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if lo > hi {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        // Degenerate axis: pad so the single value sits mid-panel.
        return (lo - 0.5, hi + 0.5);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

pub fn scatter_svg(rows: &[FeatureRow]) -> String {
    let width = 3.0 * (PANEL_W + MARGIN) + MARGIN;
    let height = PANEL_H + 2.0 * MARGIN;
    let mut out = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" \
         viewBox=\"0 0 {width} {height}\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    );
    for (p, (x_name, y_name, project)) in PAIRS.iter().enumerate() {
        let x0 = MARGIN + p as f64 * (PANEL_W + MARGIN);
        let y0 = MARGIN;
        let (x_lo, x_hi) = axis_range(rows.iter().map(|r| project(r).0));
        let (y_lo, y_hi) = axis_range(rows.iter().map(|r| project(r).1));
        out.push_str(&format!(
            "<rect x=\"{x0}\" y=\"{y0}\" width=\"{PANEL_W}\" height=\"{PANEL_H}\" \
             fill=\"none\" stroke=\"#333\"/>\n"
        ));
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"12\" text-anchor=\"middle\">{x_name} vs {y_name}</text>\n",
            x0 + PANEL_W / 2.0,
            y0 - 8.0
        ));
        out.push_str(&format!(
            "<text x=\"{x0}\" y=\"{}\" font-size=\"10\">{x_lo:.3}</text>\n",
            y0 + PANEL_H + 14.0
        ));
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"10\" text-anchor=\"end\">{x_hi:.3}</text>\n",
            x0 + PANEL_W,
            y0 + PANEL_H + 14.0
        ));
        for row in rows {
            let (x, y) = project(row);
            let px = x0 + (x - x_lo) / (x_hi - x_lo) * PANEL_W;
            // SVG y grows downward.
            let py = y0 + PANEL_H - (y - y_lo) / (y_hi - y_lo) * PANEL_H;
            out.push_str(&format!(
                "<circle cx=\"{px:.2}\" cy=\"{py:.2}\" r=\"3\" fill=\"{}\" fill-opacity=\"0.7\"/>\n",
                color(row.label)
            ));
        }
    }
    out.push_str("</svg>\n");
    out
}
