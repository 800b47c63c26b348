//! Hand-rolled SVG charts for the two graphical outputs: the fakeness
//! histogram (grouped bars per model) and the metric correlation heatmap.
//! Pure string assembly — deterministic bytes for identical reports.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use fdi_core::eval::{FakenessBucket, SpearmanMatrix};

const PALETTE: [&str; 8] = [
    "#4878cf", "#ee854a", "#6acc65", "#d65f5f", "#956cb4", "#8c613c", "#dc7ec0", "#797979",
];

const FAKENESS_LABELS: [&str; 4] = ["inadequate", "marginal", "moderate", "excessive"];

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Grouped bar chart: one group per fakeness level, one bar per model,
/// heights in percent of that model's ratings.
pub fn fakeness_histogram(fakeness: &BTreeMap<String, FakenessBucket>) -> String {
    let (width, height) = (720.0, 420.0);
    let (left, right, top, bottom) = (56.0, 20.0, 48.0, 64.0);
    let plot_w = width - left - right;
    let plot_h = height - top - bottom;
    let models: Vec<&String> = fakeness.keys().collect();
    let n = models.len().max(1) as f64;

    let mut s = String::new();
    let _ = write!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" \
         viewBox=\"0 0 {width} {height}\" font-family=\"sans-serif\">\n"
    );
    let _ = writeln!(s, "<rect width=\"{width}\" height=\"{height}\" fill=\"white\"/>");
    let _ = writeln!(
        s,
        "<text x=\"{:.1}\" y=\"20\" font-size=\"15\" text-anchor=\"middle\">Fakeness distribution</text>",
        width / 2.0
    );

    // Horizontal grid and y-axis labels every 20%.
    for tick in (0..=5).map(|i| i as f64 * 20.0) {
        let y = top + plot_h * (1.0 - tick / 100.0);
        let _ = writeln!(
            s,
            "<line x1=\"{left}\" y1=\"{y:.1}\" x2=\"{:.1}\" y2=\"{y:.1}\" stroke=\"#dddddd\"/>",
            left + plot_w
        );
        let _ = writeln!(
            s,
            "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"11\" text-anchor=\"end\">{tick:.0}%</text>",
            left - 6.0,
            y + 4.0
        );
    }

    let group_w = plot_w / 4.0;
    let bar_w = group_w * 0.8 / n;
    for (gi, label) in FAKENESS_LABELS.iter().enumerate() {
        let gx = left + gi as f64 * group_w;
        for (mi, model) in models.iter().enumerate() {
            let pct = fakeness[*model].percent[gi];
            let h = plot_h * pct / 100.0;
            let x = gx + group_w * 0.1 + mi as f64 * bar_w;
            let y = top + plot_h - h;
            let color = PALETTE[mi % PALETTE.len()];
            let _ = writeln!(
                s,
                "<rect x=\"{x:.1}\" y=\"{y:.1}\" width=\"{:.1}\" height=\"{h:.1}\" fill=\"{color}\"/>",
                bar_w.max(1.0) - 1.0
            );
            if pct > 0.0 {
                let _ = writeln!(
                    s,
                    "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"9\" text-anchor=\"middle\">{pct:.1}</text>",
                    x + bar_w / 2.0,
                    y - 3.0
                );
            }
        }
        let _ = writeln!(
            s,
            "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"12\" text-anchor=\"middle\">{label}</text>",
            gx + group_w / 2.0,
            top + plot_h + 20.0
        );
    }
    let _ = writeln!(
        s,
        "<line x1=\"{left}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" stroke=\"black\"/>",
        top + plot_h,
        left + plot_w,
        top + plot_h
    );

    // Legend, one swatch per model, along the bottom edge.
    let mut lx = left;
    let ly = height - 18.0;
    for (mi, model) in models.iter().enumerate() {
        let color = PALETTE[mi % PALETTE.len()];
        let _ = writeln!(
            s,
            "<rect x=\"{lx:.1}\" y=\"{:.1}\" width=\"12\" height=\"12\" fill=\"{color}\"/>",
            ly - 10.0
        );
        let _ = writeln!(
            s,
            "<text x=\"{:.1}\" y=\"{ly:.1}\" font-size=\"11\">{}</text>",
            lx + 16.0,
            esc(model)
        );
        lx += 16.0 + 7.0 * model.len() as f64 + 18.0;
    }

    s + "</svg>\n"
}

/// Maps a correlation in [-1, 1] to a blue-white-red fill.
fn cell_color(v: f64) -> String {
    let t = v.clamp(-1.0, 1.0);
    let (r, g, b) = if t >= 0.0 {
        // white -> red
        let lerp = |a: f64, b: f64| a + (b - a) * t;
        (lerp(255.0, 178.0), lerp(255.0, 24.0), lerp(255.0, 43.0))
    } else {
        // white -> blue
        let lerp = |a: f64, b: f64| a + (b - a) * (-t);
        (lerp(255.0, 33.0), lerp(255.0, 102.0), lerp(255.0, 172.0))
    };
    format!("rgb({},{},{})", r.round() as u8, g.round() as u8, b.round() as u8)
}

/// Correlation heatmap over the five review metrics; undefined pairs are
/// drawn gray.
pub fn spearman_heatmap(matrix: &SpearmanMatrix) -> String {
    let n = matrix.labels.len();
    let cell = 86.0;
    let (left, top) = (92.0, 92.0);
    let width = left + cell * n as f64 + 16.0;
    let height = top + cell * n as f64 + 16.0;

    let mut s = String::new();
    let _ = write!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width:.0}\" height=\"{height:.0}\" \
         viewBox=\"0 0 {width:.0} {height:.0}\" font-family=\"sans-serif\">\n"
    );
    let _ = writeln!(s, "<rect width=\"{width:.0}\" height=\"{height:.0}\" fill=\"white\"/>");
    let _ = writeln!(
        s,
        "<text x=\"{:.1}\" y=\"24\" font-size=\"15\" text-anchor=\"middle\">Metric rank correlations</text>",
        width / 2.0
    );

    for (i, label) in matrix.labels.iter().enumerate() {
        let cx = left + cell * (i as f64 + 0.5);
        let cy = top + cell * (i as f64 + 0.5);
        // Column labels rotated to fit; row labels flush right.
        let _ = writeln!(
            s,
            "<text x=\"{cx:.1}\" y=\"{:.1}\" font-size=\"11\" text-anchor=\"start\" \
             transform=\"rotate(-40 {cx:.1} {:.1})\">{}</text>",
            top - 10.0,
            top - 10.0,
            esc(label)
        );
        let _ = writeln!(
            s,
            "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"11\" text-anchor=\"end\">{}</text>",
            left - 8.0,
            cy + 4.0,
            esc(label)
        );
    }

    for (i, row) in matrix.values.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            let x = left + cell * j as f64;
            let y = top + cell * i as f64;
            let (fill, text, text_color) = match v {
                Some(v) => (
                    cell_color(*v),
                    format!("{v:.2}"),
                    if v.abs() > 0.6 { "white" } else { "black" },
                ),
                None => ("#cccccc".to_owned(), "n/a".to_owned(), "black"),
            };
            let _ = writeln!(
                s,
                "<rect x=\"{x:.1}\" y=\"{y:.1}\" width=\"{cell:.1}\" height=\"{cell:.1}\" \
                 fill=\"{fill}\" stroke=\"white\"/>"
            );
            let _ = writeln!(
                s,
                "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"12\" text-anchor=\"middle\" \
                 fill=\"{text_color}\">{text}</text>",
                x + cell / 2.0,
                y + cell / 2.0 + 4.0
            );
        }
    }
    s + "</svg>\n"
}
